#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>

#include "json.hpp"
#include "net.hpp"

namespace aosr {

// Parameter container shared by network checkpoints and feature-extractor
// weights; layout is documented in docs/formats.md.
struct Container {
  nlohmann::json meta;
  ParamMap tensors;
};

// Writes to a sibling temporary file and renames it into place.
void write_container(const Container& c, const std::filesystem::path& path);
Container read_container(const std::filesystem::path& path);

// Format error naming the first key of object `j` not in `known`; `where`
// labels the object in the message. Non-objects fail the same way.
void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                        const std::string& where);

nlohmann::json config_to_json(const NetworkConfig& cfg);
NetworkConfig config_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Atomic text write (temp file + rename).
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace aosr
