#include "image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include "error.hpp"

namespace aosr {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c),
      data(static_cast<std::size_t>(h) * w * c, fill) {}

std::vector<double> Image::channel(int c) const {
  std::vector<double> out(pixels());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data[i * channels + c];
  return out;
}

void Image::set_channel(int c, std::span<const double> plane) {
  for (std::size_t i = 0; i < plane.size(); ++i) data[i * channels + c] = plane[i];
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<unsigned char> bytes;  // big-endian samples for 16-bit
};

void png_error_to_jmp(png_structp png, png_const_charp) {
  std::longjmp(png_jmpbuf(png), 1);
}

RawPng read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) fail(ErrorCode::Io, "cannot open image: " + path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(ErrorCode::Format, "not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_to_jmp, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Io, "libpng allocation failed");
  }

  RawPng raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Format, "corrupt PNG data: " + path.string());
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);

  const std::size_t stride = png_get_rowbytes(png, info);
  raw.bytes.resize(stride * static_cast<std::size_t>(raw.height));
  rows.resize(static_cast<std::size_t>(raw.height));
  for (int y = 0; y < raw.height; ++y) rows[y] = raw.bytes.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return raw;
}

double sample(const RawPng& raw, std::size_t idx) {
  if (raw.bit_depth == 16) {
    const unsigned v = (raw.bytes[2 * idx] << 8) | raw.bytes[2 * idx + 1];
    return v / 65535.0;
  }
  return raw.bytes[idx] / 255.0;
}

void write_png(const std::filesystem::path& path, int width, int height,
               int channels, int bit_depth,
               const std::vector<unsigned char>& bytes) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) fail(ErrorCode::Io, "cannot write image: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_to_jmp, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Io, "libpng allocation failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Io, "failed writing PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride =
      static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(bytes.data() + stride * y);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const RawPng raw = read_png(path);
  if (raw.channels < 3)
    fail(ErrorCode::Format, "expected an RGB image: " + path.string());
  Image img(raw.height, raw.width, 3);
  for (std::size_t p = 0; p < img.pixels(); ++p)
    for (int c = 0; c < 3; ++c)
      img.data[p * 3 + c] = sample(raw, p * raw.channels + c);
  return img;
}

Image load_gray(const std::filesystem::path& path) {
  const RawPng raw = read_png(path);
  if (raw.channels > 2)
    fail(ErrorCode::Format, "expected a single-channel image: " + path.string());
  Image img(raw.height, raw.width, 1);
  for (std::size_t p = 0; p < img.pixels(); ++p)
    img.data[p] = sample(raw, p * raw.channels);
  return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 3 && img.channels != 1)
    fail(ErrorCode::ShapeMismatch, "save_image expects 1 or 3 channels");
  std::vector<unsigned char> bytes(img.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::clamp(img.data[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
  }
  write_png(path, img.width, img.height, img.channels, 8, bytes);
}

void save_gray16(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 1)
    fail(ErrorCode::ShapeMismatch, "save_gray16 expects 1 channel");
  std::vector<unsigned char> bytes(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::clamp(img.data[i], 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::floor(v * 65535.0 + 0.5));
    bytes[2 * i] = static_cast<unsigned char>(q >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
  }
  write_png(path, img.width, img.height, 1, 16, bytes);
}

std::size_t percentile_rank(std::size_t n, double p) {
  // The small slack absorbs representation error in p (0.07 * 100 must
  // give rank 7, not 8).
  const double r = std::ceil(p * static_cast<double>(n) - 1e-9);
  const auto rank = static_cast<std::size_t>(std::max(r, 1.0));
  return std::min(rank, n) - 1;
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "percentile of empty array");
  if (!(p >= 0.0 && p <= 1.0))
    fail(ErrorCode::Domain, "percentile fraction outside [0,1]");
  std::vector<double> tmp(values.begin(), values.end());
  const std::size_t k = percentile_rank(tmp.size(), p);
  std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(k),
                   tmp.end());
  return tmp[k];
}

Image clamp01(Image img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

std::vector<std::filesystem::path> list_png(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    fail(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (ext == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace aosr
