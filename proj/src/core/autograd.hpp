#pragma once

// Minimal define-by-run reverse-mode differentiation over NCHW tensors.
// Every op builds a Node holding its forward value and a closure that pushes
// the node's gradient into its inputs. Nodes that do not depend on any
// parameter carry no closure and keep no references to their inputs.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace aosr::ag {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<Var> inputs;
  std::function<void(Node&)> backward_fn;

  Tensor& grad_buffer();
};

Var constant(Tensor t);
Var parameter(Tensor t);

// Seeds d(root)/d(root) = 1 and runs the tape backwards. root must hold a
// single element.
void backward(const Var& root);

// 'Same' convolution, stride 1, odd square kernel, zero padding of
// dilation * (k / 2). weight is Cout x Cin x k x k, bias 1 x Cout x 1 x 1
// or null.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int dilation = 1);

// Normalizes across channels independently at every (n, y, x) site, then
// applies per-channel gain and bias (each 1 x C x 1 x 1, may be null).
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

// slope is a single learnable scalar (1 x 1 x 1 x 1).
Var prelu(const Var& x, const Var& slope);
Var relu(const Var& x);

Var add(const Var& a, const Var& b);
Var concat_channels(std::span<const Var> parts);

// scale * sign(x) * |x|^gamma, replaced by the matching line through the
// origin for |x| < linear_zone so the derivative stays finite at 0.
Var signed_pow(const Var& x, double gamma, double scale = 1.0,
               double linear_zone = 1e-3);

// Per-(n, c) affine remap clamp((x - lo) / (hi - lo), 0, 1) with lo/hi
// treated as constants. Planes flagged in passthrough are copied unchanged.
// lo, hi and passthrough are indexed n * C + c.
Var stretch_planes(const Var& x, std::vector<double> lo, std::vector<double> hi,
                   std::vector<char> passthrough);

// 2x2 max pooling, stride 2. H and W must be even.
Var max_pool2(const Var& x);

// 2x bilinear upsampling with half-pixel centers (align_corners = false).
Var upsample2(const Var& x);

Var clamp01(const Var& x);

// Constant per-channel affine map x * scale[c] + shift[c].
Var channel_affine(const Var& x, std::vector<double> scale,
                   std::vector<double> shift);

// Scalar-valued reductions (1 x 1 x 1 x 1 results).
Var mean_abs_diff(const Var& a, const Tensor& target);
Var cosine_distance(const Var& a, const Tensor& target);
Var weighted_sum(std::span<const Var> scalars, std::span<const double> weights);
Var scale(const Var& x, double k);

}  // namespace aosr::ag
