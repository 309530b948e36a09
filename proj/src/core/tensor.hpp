#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "image.hpp"

namespace aosr {

struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense NCHW array. Used both for feature maps and for parameters
// (conv kernels are Cout x Cin x K x K, vectors are 1 x C x 1 x 1).
class Tensor {
 public:
  // Aligned to the widest SIMD width Eigen uses, so vectorized kernels take
  // the same code path (and summation order) for every allocation.
  using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape_(s), v_(s.numel(), fill) {}
  Tensor(Shape s, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t numel() const noexcept { return v_.size(); }
  bool empty() const noexcept { return v_.empty(); }

  double* data() noexcept { return v_.data(); }
  const double* data() const noexcept { return v_.data(); }
  Storage& values() noexcept { return v_; }
  const Storage& values() const noexcept { return v_; }

  double& operator[](std::size_t i) noexcept { return v_[i]; }
  double operator[](std::size_t i) const noexcept { return v_[i]; }

  double& at(int n, int c, int y, int x) noexcept { return v_[offset(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const noexcept { return v_[offset(n, c, y, x)]; }

  // Pointer to the start of the (n, c) plane.
  double* plane(int n, int c) noexcept { return v_.data() + offset(n, c, 0, 0); }
  const double* plane(int n, int c) const noexcept {
    return v_.data() + offset(n, c, 0, 0);
  }

  void fill(double x);

 private:
  std::size_t offset(int n, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w + x;
  }

  Shape shape_{};
  Storage v_;
};

// HWC image <-> 1 x C x H x W tensor.
Tensor to_tensor(const Image& img);
Tensor stack(const std::vector<Image>& imgs);
Image to_image(const Tensor& t, int n = 0);

}  // namespace aosr
