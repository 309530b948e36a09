#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "autograd.hpp"
#include "image.hpp"
#include "priors.hpp"

namespace aosr {

struct NetworkConfig {
  int base_channels = 16;
  GammaBank gamma_bank{};
  // One OLS parameter set per degradation scene (haze, sand, low light).
  std::array<OLSParams, 3> ols_triples{OLSParams{0.01, 0.99, 0.05, 0.05},
                                       OLSParams{0.01, 0.99, 0.10, 0.10},
                                       OLSParams{0.01, 0.99, 0.20, 0.20}};
  std::array<int, 4> atrous_rates{3, 6, 9, 12};
  std::array<int, 3> edfm_channels{16, 32, 64};
  double prelu_init = 0.25;
  // Ablation switches: a disabled branch keeps only its stem convolution.
  bool use_dem = true;
  bool use_crm = true;
  bool use_mem = true;

  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

using ParamMap = std::map<std::string, Tensor>;

// Names and shapes of every learnable array, in initialization order.
std::vector<std::pair<std::string, Shape>> parameter_manifest(const NetworkConfig& config);

struct TrainingMeta {
  int epochs = 0;
  std::array<double, 3> loss_weights{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
  bool operator==(const TrainingMeta&) const = default;
};

struct Checkpoint {
  NetworkConfig config;
  ParamMap params;
  TrainingMeta meta;

  // ConfigMismatch unless params match parameter_manifest(config) exactly.
  void validate() const;
};

Checkpoint init_weights(const NetworkConfig& config, std::uint64_t seed);

// Per-plane OLS thresholds of one CRM forward, so finite-difference checks
// can replay them while perturbing parameters.
struct OlsThresholds {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<char> passthrough;
};

struct OlsThresholdCache {
  bool replay = false;
  std::vector<OlsThresholds> entries;  // one per OLS triple
};

// Thresholds for every (n, c) plane of a feature tensor. Degenerate planes
// are flagged passthrough.
OlsThresholds ols_plane_thresholds(const Tensor& features, const OLSParams& params);

// Builds the differentiable graph for one forward pass over a parameter set.
class Network {
 public:
  Network(const NetworkConfig& config, const ParamMap& params, bool trainable);

  ag::Var param(const std::string& name);
  const std::map<std::string, ag::Var>& bound() const noexcept { return bound_; }
  void set_ols_cache(OlsThresholdCache* cache) noexcept { ols_cache_ = cache; }

  ag::Var conv(const std::string& prefix, const ag::Var& x, int dilation = 1);
  ag::Var convl(const std::string& prefix, const ag::Var& x);
  ag::Var srb(const std::string& prefix, const ag::Var& x);

  // Signed gamma bank on the DEM stem output, one branch per gamma.
  std::vector<ag::Var> dem_branches(const ag::Var& stem_out) const;

  ag::Var dem(const ag::Var& img);
  ag::Var crm(const ag::Var& img);
  ag::Var mem(const ag::Var& img);
  // Inputs share shape B x base x H x W with H, W divisible by 4.
  ag::Var edfm(const ag::Var& dem, const ag::Var& crm, const ag::Var& mem);
  ag::Var forward(const ag::Var& img);

 private:
  const NetworkConfig& config_;
  const ParamMap& params_;
  bool trainable_;
  std::map<std::string, ag::Var> bound_;
  OlsThresholdCache* ols_cache_ = nullptr;
};

// Inference on an arbitrary-size RGB image: reflect-pads to a multiple of 4,
// runs the network, crops back. Output is clamped to [0,1].
Image aosrnet_forward(const Image& img, const Checkpoint& ckpt);

// Reflect padding of bottom/right edges up to multiples of `multiple`.
Image pad_to_multiple(const Image& img, int multiple);
Image crop(const Image& img, int y0, int x0, int h, int w);

}  // namespace aosr
