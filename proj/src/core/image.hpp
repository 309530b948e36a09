#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace aosr {

// Interleaved HWC raster of real intensities. Images loaded from disk or
// passed through clamp01 hold values in [0,1]; intermediate results may not.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  std::size_t size() const noexcept { return data.size(); }
  std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  bool same_shape(const Image& o) const noexcept {
    return height == o.height && width == o.width && channels == o.channels;
  }

  double& at(int y, int x, int c) noexcept {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const noexcept {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  // One channel copied out as a contiguous plane.
  std::vector<double> channel(int c) const;
  void set_channel(int c, std::span<const double> plane);
};

// 8- or 16-bit RGB(A) PNG; alpha is dropped. 8-bit v maps to v/255,
// 16-bit v to v/65535.
Image load_image(const std::filesystem::path& path);

// Single-channel PNG (8 or 16 bit), used for depth maps.
Image load_gray(const std::filesystem::path& path);

// Clamps to [0,1], quantizes round-half-up to 8 bit and writes PNG.
// Accepts 1- or 3-channel images.
void save_image(const Image& img, const std::filesystem::path& path);

// 16-bit single-channel PNG, used for depth maps.
void save_gray16(const Image& img, const std::filesystem::path& path);

// Nearest-rank percentile: the element at rank ceil(p*N) of the sorted
// values, rank 1 for p == 0. Throws EmptyInput on an empty array.
double percentile(std::span<const double> values, double p);

// Nearest-rank index into a sorted array of n elements.
std::size_t percentile_rank(std::size_t n, double p);

Image clamp01(Image img);

// Sorted list of *.png files in a directory.
std::vector<std::filesystem::path> list_png(const std::filesystem::path& dir);

}  // namespace aosr
