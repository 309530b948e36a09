#include "priors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace aosr {

void GammaBank::validate() const {
  if (gammas.empty()) fail(ErrorCode::InvalidArgument, "empty gamma bank");
  for (double g : gammas)
    if (!(g > 0.0)) fail(ErrorCode::Domain, "gamma must be positive");
  if (!(epsilon > 0.0)) fail(ErrorCode::Domain, "gamma epsilon must be positive");
}

void OLSParams::validate() const {
  if (!(p_min >= 0.0 && p_min < p_max && p_max <= 1.0))
    fail(ErrorCode::Domain, "OLS requires 0 <= p_min < p_max <= 1");
  if (!(p_a_min >= 0.0 && p_a_max >= 0.0))
    fail(ErrorCode::Domain, "OLS adjustment percentages must be non-negative");
}

Image gamma_correct(const Image& img, double gamma, double epsilon) {
  if (!(gamma > 0.0)) fail(ErrorCode::Domain, "gamma must be positive");
  if (!(epsilon > 0.0)) fail(ErrorCode::Domain, "epsilon must be positive");
  Image out = img;
  for (double& v : out.data) {
    if (v < 0.0) fail(ErrorCode::Domain, "gamma correction of a negative value");
    v = epsilon * std::pow(v, gamma);
  }
  return out;
}

std::vector<Image> gamma_bank_apply(const Image& img, const GammaBank& bank) {
  bank.validate();
  std::vector<Image> out;
  out.reserve(bank.gammas.size());
  for (double g : bank.gammas) out.push_back(gamma_correct(img, g, bank.epsilon));
  return out;
}

Image linear_stretch(const Image& img) {
  Image out = img;
  for (int c = 0; c < img.channels; ++c) {
    const auto plane = img.channel(c);
    const auto [mn, mx] = std::minmax_element(plane.begin(), plane.end());
    if (!(*mx > *mn))
      fail(ErrorCode::DegenerateRange, "linear stretch of constant channel " + std::to_string(c));
    const double lo = *mn;
    const double span = *mx - *mn;
    for (std::size_t p = 0; p < img.pixels(); ++p)
      out.data[p * img.channels + c] = (plane[p] - lo) / span;
  }
  return out;
}

StretchBounds expand_bounds(double t_min, double t_max, const OLSParams& params) {
  const double range = t_max - t_min;
  return {t_min - params.p_a_min * range, t_max + params.p_a_max * range};
}

StretchBounds ols_bounds(std::span<const double> channel, const OLSParams& params) {
  params.validate();
  if (channel.empty()) fail(ErrorCode::EmptyInput, "OLS of empty channel");
  std::vector<double> sorted(channel.begin(), channel.end());
  std::sort(sorted.begin(), sorted.end());
  const double t_min = sorted[percentile_rank(sorted.size(), params.p_min)];
  const double t_max = sorted[percentile_rank(sorted.size(), params.p_max)];
  if (!(t_max > t_min))
    fail(ErrorCode::DegenerateRange, "OLS truncation interval is empty");
  return expand_bounds(t_min, t_max, params);
}

Image optimized_linear_stretch(const Image& img, const OLSParams& params) {
  Image out = img;
  for (int c = 0; c < img.channels; ++c) {
    const auto plane = img.channel(c);
    const StretchBounds b = ols_bounds(plane, params);
    const double inv = 1.0 / (b.hi - b.lo);
    for (std::size_t p = 0; p < img.pixels(); ++p)
      out.data[p * img.channels + c] = std::clamp((plane[p] - b.lo) * inv, 0.0, 1.0);
  }
  return out;
}

Image local_contrast(const Image& img, int window) {
  if (window < 1 || window % 2 == 0)
    fail(ErrorCode::BadWindow, "window must be a positive odd size");
  const int r = window / 2;
  Image out(img.height, img.width, img.channels);
  // Separable: running extrema along rows, then along columns.
  Image row_max = out;
  Image row_min = out;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double mx = -INFINITY, mn = INFINITY;
        for (int dx = -r; dx <= r; ++dx) {
          const double v = img.at(y, std::clamp(x + dx, 0, img.width - 1), c);
          mx = std::max(mx, v);
          mn = std::min(mn, v);
        }
        row_max.at(y, x, c) = mx;
        row_min.at(y, x, c) = mn;
      }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double mx = -INFINITY, mn = INFINITY;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = std::clamp(y + dy, 0, img.height - 1);
          mx = std::max(mx, row_max.at(yy, x, c));
          mn = std::min(mn, row_min.at(yy, x, c));
        }
        out.at(y, x, c) = mx - mn;
      }
  return out;
}

}  // namespace aosr
