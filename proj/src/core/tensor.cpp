#include "tensor.hpp"

#include <algorithm>

#include "error.hpp"

namespace aosr {

std::string Shape::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) +
         "x" + std::to_string(w);
}

Tensor::Tensor(Shape s, std::vector<double> values)
    : shape_(s), v_(values.begin(), values.end()) {
  if (v_.size() != s.numel())
    fail(ErrorCode::ShapeMismatch, "tensor data does not match shape " + s.str());
}

void Tensor::fill(double x) { std::fill(v_.begin(), v_.end(), x); }

Tensor to_tensor(const Image& img) { return stack({img}); }

Tensor stack(const std::vector<Image>& imgs) {
  if (imgs.empty()) fail(ErrorCode::EmptyInput, "stack of zero images");
  const Image& first = imgs.front();
  Tensor t(Shape{static_cast<int>(imgs.size()), first.channels, first.height,
                 first.width});
  for (std::size_t n = 0; n < imgs.size(); ++n) {
    const Image& img = imgs[n];
    if (!img.same_shape(first))
      fail(ErrorCode::ShapeMismatch, "stack of differently shaped images");
    for (int c = 0; c < img.channels; ++c) {
      double* dst = t.plane(static_cast<int>(n), c);
      for (std::size_t p = 0; p < img.pixels(); ++p)
        dst[p] = img.data[p * img.channels + c];
    }
  }
  return t;
}

Image to_image(const Tensor& t, int n) {
  const Shape& s = t.shape();
  Image img(s.h, s.w, s.c);
  for (int c = 0; c < s.c; ++c) {
    const double* src = t.plane(n, c);
    for (std::size_t p = 0; p < s.plane(); ++p) img.data[p * s.c + c] = src[p];
  }
  return img;
}

}  // namespace aosr
