#pragma once

#include <span>
#include <utility>
#include <vector>

#include "image.hpp"

namespace aosr {

struct GammaBank {
  std::vector<double> gammas{0.25, 0.5, 2.0, 4.0};
  double epsilon = 1.0;

  void validate() const;
  bool operator==(const GammaBank&) const = default;
};

// Percentile truncation fractions and the adjustment percentages that widen
// the truncated interval.
struct OLSParams {
  double p_min = 0.01;
  double p_max = 0.99;
  double p_a_min = 0.0;
  double p_a_max = 0.0;

  void validate() const;
  bool operator==(const OLSParams&) const = default;
};

struct StretchBounds {
  double lo;  // expanded lower threshold
  double hi;  // expanded upper threshold
};

// epsilon * I^gamma elementwise. Throws Domain on negative input.
Image gamma_correct(const Image& img, double gamma, double epsilon = 1.0);
std::vector<Image> gamma_bank_apply(const Image& img, const GammaBank& bank);

// Per-channel (I - min) / (max - min). DegenerateRange on a constant channel.
Image linear_stretch(const Image& img);

// Thresholds for one channel: percentiles at p_min / p_max, widened by the
// adjustment percentages. DegenerateRange if the two percentiles coincide.
StretchBounds ols_bounds(std::span<const double> channel, const OLSParams& params);

// Widening step alone, from already-known truncation values.
StretchBounds expand_bounds(double t_min, double t_max, const OLSParams& params);

// Per-channel optimized linear stretch, clamped to [0,1].
Image optimized_linear_stretch(const Image& img, const OLSParams& params);

// Per-pixel max - min over a window x window neighbourhood, replicate padding.
Image local_contrast(const Image& img, int window);

}  // namespace aosr
