#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "error.hpp"

// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("aosr_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

#define CHECK_ERROR_CODE(expr, code_)                 \
  do {                                                \
    bool thrown_ = false;                             \
    try {                                             \
      (void)(expr);                                   \
    } catch (const aosr::Error& e_) {                 \
      thrown_ = true;                                 \
      CHECK_MESSAGE(e_.code() == (code_), e_.what()); \
    }                                                 \
    CHECK_MESSAGE(thrown_, "expected " #code_);       \
  } while (0)

inline std::filesystem::path test_data(const std::string& rel) { return std::filesystem::path(AOSR_TEST_DATA) / rel; }
inline std::filesystem::path repo_data(const std::string& rel) { return std::filesystem::path(AOSR_REPO_DATA) / rel; }
