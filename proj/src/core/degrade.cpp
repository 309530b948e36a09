#include "degrade.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "error.hpp"
#include "rng.hpp"

namespace aosr {

std::string_view scene_name(SceneKind kind) noexcept {
  switch (kind) {
    case SceneKind::Haze: return "haze";
    case SceneKind::Sand: return "sand";
    case SceneKind::LowLight: return "lowlight";
  }
  return "?";
}

SceneKind parse_scene(std::string_view name) {
  if (name == "haze") return SceneKind::Haze;
  if (name == "sand") return SceneKind::Sand;
  if (name == "lowlight" || name == "low-light" || name == "low") return SceneKind::LowLight;
  fail(ErrorCode::InvalidArgument, "unknown scene kind: " + std::string(name));
}

bool atmo_light_fits(SceneKind kind, const Rgb& a) noexcept {
  for (double v : a)
    if (!(v >= 0.0 && v <= 1.0)) return false;
  switch (kind) {
    case SceneKind::Haze: {
      const auto [mn, mx] = std::minmax_element(a.begin(), a.end());
      return *mx - *mn <= 0.1 + 1e-12;
    }
    case SceneKind::Sand: return a[0] >= a[1] && a[1] >= a[2];
    case SceneKind::LowLight: return true;
  }
  return false;
}

void DegradationSpec::validate() const {
  switch (kind) {
    case SceneKind::Haze:
    case SceneKind::Sand:
      if (!(beta >= 0.0)) fail(ErrorCode::Domain, "beta must be non-negative");
      if (!atmo_light_fits(kind, atmo_light))
        fail(ErrorCode::Domain, std::string("atmospheric light does not fit scene ") +
                                    std::string(scene_name(kind)));
      break;
    case SceneKind::LowLight:
      if (!(dark_gamma > 1.0)) fail(ErrorCode::Domain, "dark_gamma must exceed 1");
      if (!(illum_scale > 0.0 && illum_scale <= 1.0))
        fail(ErrorCode::Domain, "illum_scale must lie in (0, 1]");
      break;
  }
}

AtmoLightSet AtmoLightSet::default_haze() {
  return {"haze-default",
          {{0.70, 0.70, 0.70}, {0.74, 0.74, 0.74}, {0.78, 0.78, 0.78}, {0.82, 0.82, 0.82},
           {0.86, 0.86, 0.86}, {0.90, 0.90, 0.90}, {0.95, 0.95, 0.95}, {1.00, 1.00, 1.00}}};
}

AtmoLightSet AtmoLightSet::default_sand() {
  return {"sand-default",
          {{0.95, 0.80, 0.55}, {0.92, 0.78, 0.52}, {0.90, 0.75, 0.50}, {0.88, 0.72, 0.45},
           {0.85, 0.70, 0.45}, {0.82, 0.68, 0.42}, {0.80, 0.65, 0.38}, {0.75, 0.60, 0.35}}};
}

void AtmoLightSet::validate(SceneKind kind) const {
  if (entries.empty()) fail(ErrorCode::EmptySet, "atmospheric light set '" + name + "' is empty");
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (!atmo_light_fits(kind, entries[i]))
      fail(ErrorCode::Domain, "entry " + std::to_string(i) + " of '" + name +
                                  "' does not fit scene " + std::string(scene_name(kind)));
}

AtmoLightSet read_atmo_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open atmospheric light set: " + path.string());
  AtmoLightSet set;
  set.name = path.stem().string();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    Rgb rgb;
    if (!(ss >> rgb[0])) continue;
    std::string rest;
    if (!(ss >> rgb[1] >> rgb[2]) || (ss >> rest))
      fail(ErrorCode::Format, path.string() + ":" + std::to_string(lineno) +
                                  ": expected three numbers");
    set.entries.push_back(rgb);
  }
  return set;
}

void write_atmo_set(const AtmoLightSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write atmospheric light set: " + path.string());
  out << "# atmospheric light set: " << set.name << "\n# R G B\n";
  out << std::setprecision(17);
  for (const Rgb& e : set.entries) out << e[0] << ' ' << e[1] << ' ' << e[2] << '\n';
}

Image synth_scatter(const Image& clean, const Image& depth, double beta, const Rgb& atmo_light) {
  if (depth.channels != 1 || depth.height != clean.height || depth.width != clean.width)
    fail(ErrorCode::ShapeMismatch, "depth map must be single-channel and match the image size");
  if (!(beta >= 0.0)) fail(ErrorCode::Domain, "beta must be non-negative");
  Image out = clean;
  for (std::size_t p = 0; p < clean.pixels(); ++p) {
    const double d = depth.data[p];
    if (d < 0.0) fail(ErrorCode::NegativeDepth, "negative depth value");
    const double t = std::exp(-beta * d);
    for (int c = 0; c < clean.channels; ++c) {
      const double j = clean.data[p * clean.channels + c];
      out.data[p * clean.channels + c] = j * t + atmo_light[c] * (1.0 - t);
    }
  }
  return out;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

Image illumination_map(const Image& clean) {
  Image lum(clean.height, clean.width, 1);
  for (std::size_t p = 0; p < clean.pixels(); ++p) {
    const double* px = &clean.data[p * clean.channels];
    lum.data[p] = clean.channels >= 3 ? 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2] : px[0];
  }
  const double sigma = std::min(clean.height, clean.width) / 8.0;
  if (sigma <= 0.0) return lum;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  Image tmp = lum;
  for (int y = 0; y < lum.height; ++y)
    for (int x = 0; x < lum.width; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[i + r] * lum.at(y, std::clamp(x + i, 0, lum.width - 1), 0);
      tmp.at(y, x, 0) = acc;
    }
  for (int y = 0; y < lum.height; ++y)
    for (int x = 0; x < lum.width; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[i + r] * tmp.at(std::clamp(y + i, 0, lum.height - 1), x, 0);
      lum.at(y, x, 0) = acc;
    }
  return lum;
}

Image synth_lowlight(const Image& clean, const Image& illumination, double dark_gamma,
                     double illum_scale) {
  // dark_gamma == 1 is accepted as the identity limit.
  if (!(dark_gamma >= 1.0)) fail(ErrorCode::Domain, "dark_gamma must be at least 1");
  if (!(illum_scale > 0.0 && illum_scale <= 1.0))
    fail(ErrorCode::Domain, "illum_scale must lie in (0, 1]");
  if (illumination.channels != 1 || illumination.height != clean.height ||
      illumination.width != clean.width)
    fail(ErrorCode::ShapeMismatch, "illumination map must match the image size");
  Image out = clean;
  for (std::size_t p = 0; p < clean.pixels(); ++p) {
    const double l = std::clamp(illum_scale * illumination.data[p], 0.0, 1.0);
    const double gain = std::pow(l, dark_gamma - 1.0);
    for (int c = 0; c < clean.channels; ++c) {
      double& v = out.data[p * clean.channels + c];
      v = std::clamp(v * gain, 0.0, 1.0);
    }
  }
  return out;
}

Image synth_lowlight(const Image& clean, double dark_gamma, double illum_scale) {
  return synth_lowlight(clean, illumination_map(clean), dark_gamma, illum_scale);
}

Rgb sample_atmo_light(const AtmoLightSet& set, std::uint64_t seed) {
  if (set.entries.empty())
    fail(ErrorCode::EmptySet, "atmospheric light set '" + set.name + "' is empty");
  Rng rng(seed);
  return set.entries[rng.index(set.entries.size())];
}

DegradationSpec sample_spec(SceneKind kind, const SynthesisRanges& ranges, std::uint64_t seed) {
  Rng rng(seed);
  DegradationSpec spec;
  spec.kind = kind;
  switch (kind) {
    case SceneKind::Haze:
    case SceneKind::Sand: {
      spec.beta = rng.uniform(ranges.beta[0], ranges.beta[1]);
      const AtmoLightSet& set = kind == SceneKind::Haze ? ranges.haze : ranges.sand;
      spec.atmo_light = sample_atmo_light(set, rng.next());
      break;
    }
    case SceneKind::LowLight:
      spec.dark_gamma = rng.uniform(ranges.dark_gamma[0], ranges.dark_gamma[1]);
      spec.illum_scale = rng.uniform(ranges.illum_scale[0], ranges.illum_scale[1]);
      break;
  }
  return spec;
}

ImagePair synth_pair(const Image& clean, const std::optional<Image>& depth,
                     const DegradationSpec& spec) {
  spec.validate();
  if (clean.channels != 3) fail(ErrorCode::ShapeMismatch, "clean image must be RGB");
  if (spec.kind == SceneKind::LowLight)
    return {synth_lowlight(clean, spec.dark_gamma, spec.illum_scale), clean};
  if (!depth)
    fail(ErrorCode::MissingDepth,
         std::string(scene_name(spec.kind)) + " synthesis requires a depth map");
  Image d = *depth;
  const double mx = *std::max_element(d.data.begin(), d.data.end());
  if (mx > 0.0)
    for (double& v : d.data) v /= mx;
  return {clamp01(synth_scatter(clean, d, spec.beta, spec.atmo_light)), clean};
}

ImagePair synth_pair(const Image& clean, const std::optional<Image>& depth, SceneKind kind,
                     const SynthesisRanges& ranges, std::uint64_t seed, DegradationSpec* spec_out) {
  const DegradationSpec spec = sample_spec(kind, ranges, seed);
  if (spec_out) *spec_out = spec;
  return synth_pair(clean, depth, spec);
}

}  // namespace aosr
