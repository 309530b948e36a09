#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "autograd.hpp"
#include "image.hpp"
#include "net.hpp"

namespace aosr {

struct LossWeights {
  double l1 = 0.8;
  double color = 0.1;
  double cr = 0.1;

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

struct FeatureTapWeights {
  std::array<double, 5> omegas{1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0};
};

// Plain feed-forward conv stack (3x3 conv, ReLU, 2x2 max pool) with named
// tap points. Inputs are normalized with per-channel mean/std first.
class FeatureExtractor {
 public:
  struct Layer {
    enum class Kind { Conv, Relu, MaxPool } kind;
    std::string name;
    int in = 0;
    int out = 0;
  };

  // Tiny fixed random-weight stand-in with five taps and no pooling, for
  // offline tests and desk-scale training.
  static FeatureExtractor surrogate(std::uint64_t seed = 7);
  // 19-layer VGG topology tapped at the five pre-pooling activations
  // (relu1_2 ... relu5_4). Weights are random until loaded from a file.
  static FeatureExtractor vgg19(std::uint64_t seed = 0);
  static FeatureExtractor load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::vector<ag::Var> taps(const ag::Var& img) const;
  std::vector<Tensor> taps(const Tensor& img) const;

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const std::vector<std::string>& tap_names() const noexcept { return tap_names_; }
  const ParamMap& weights() const noexcept { return weights_; }

 private:
  void randomize(std::uint64_t seed, double gain);

  std::vector<Layer> layers_;
  std::vector<std::string> tap_names_;
  ParamMap weights_;
  std::array<double, 3> mean_{0.485, 0.456, 0.406};
  std::array<double, 3> std_{0.229, 0.224, 0.225};
};

// Mean absolute difference. ShapeMismatch on differing shapes.
double l1_loss(const Image& restored, const Image& truth);
// 1 - cosine similarity of the flattened tensors. ZeroVector if either norm < 1e-12.
double color_loss(const Image& restored, const Image& truth);
// Sum_i w_i * |psi_i(restored) - psi_i(truth)| / |psi_i(degraded) - psi_i(truth)|
// with mean-normalized L1 norms. DegenerateAnchor if a denominator < 1e-12.
double cr_loss(const Image& restored, const Image& degraded, const Image& truth,
               const FeatureExtractor& extractor, const FeatureTapWeights& omegas = {});

struct LossBreakdown {
  double total = 0.0;
  double l1 = 0.0;
  double color = 0.0;
  double cr = 0.0;
};

double combine_losses(double l1, double color, double cr, const LossWeights& w);

// Differentiable versions; gradients flow only into `restored`.
ag::Var l1_loss(const ag::Var& restored, const Tensor& truth);
ag::Var color_loss(const ag::Var& restored, const Tensor& truth);
ag::Var cr_loss(const ag::Var& restored, const Tensor& degraded, const Tensor& truth,
                const FeatureExtractor& extractor, const FeatureTapWeights& omegas = {});

// All three terms are evaluated so they can be logged; zero-weighted ones
// contribute no gradient.
ag::Var total_loss(const ag::Var& restored, const Tensor& degraded, const Tensor& truth,
                   const LossWeights& weights, const FeatureExtractor& extractor,
                   LossBreakdown* breakdown = nullptr);

}  // namespace aosr
