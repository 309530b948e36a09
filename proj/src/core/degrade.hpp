#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "image.hpp"

namespace aosr {

enum class SceneKind { Haze, Sand, LowLight };

std::string_view scene_name(SceneKind kind) noexcept;
SceneKind parse_scene(std::string_view name);
inline constexpr std::array<SceneKind, 3> kAllScenes{SceneKind::Haze, SceneKind::Sand,
                                                     SceneKind::LowLight};

using Rgb = std::array<double, 3>;

struct DegradationSpec {
  SceneKind kind = SceneKind::Haze;
  double beta = 1.0;                   // scattering per unit (normalized) depth
  Rgb atmo_light{0.9, 0.9, 0.9};
  double dark_gamma = 2.0;             // low light only, > 1
  double illum_scale = 0.5;            // low light only, (0, 1]

  void validate() const;
};

// Haze lights must be near-achromatic, sand lights red >= green >= blue.
bool atmo_light_fits(SceneKind kind, const Rgb& a) noexcept;

struct AtmoLightSet {
  std::string name;
  std::vector<Rgb> entries;

  static AtmoLightSet default_haze();
  static AtmoLightSet default_sand();
  void validate(SceneKind kind) const;
};

// Plain text: one "R G B" triple per line, '#' starts a comment.
AtmoLightSet read_atmo_set(const std::filesystem::path& path);
void write_atmo_set(const AtmoLightSet& set, const std::filesystem::path& path);

// Koschmieder model: J * t + A * (1 - t), t = exp(-beta * d). depth is
// single-channel with the same spatial size as clean.
Image synth_scatter(const Image& clean, const Image& depth, double beta, const Rgb& atmo_light);

// Gaussian-blurred luminance with sigma = min(H, W) / 8.
Image illumination_map(const Image& clean);

// clean * (illum_scale * L)^(dark_gamma - 1), clamped to [0,1].
Image synth_lowlight(const Image& clean, const Image& illumination, double dark_gamma,
                     double illum_scale);
Image synth_lowlight(const Image& clean, double dark_gamma, double illum_scale);

Rgb sample_atmo_light(const AtmoLightSet& set, std::uint64_t seed);

// Parameter ranges for randomized synthesis.
struct SynthesisRanges {
  std::array<double, 2> beta{0.8, 2.5};
  std::array<double, 2> dark_gamma{1.5, 3.0};
  std::array<double, 2> illum_scale{0.4, 0.9};
  AtmoLightSet haze = AtmoLightSet::default_haze();
  AtmoLightSet sand = AtmoLightSet::default_sand();
};

DegradationSpec sample_spec(SceneKind kind, const SynthesisRanges& ranges, std::uint64_t seed);

struct ImagePair {
  Image degraded;
  Image clean;
};

// Depth is normalized by its maximum before use. MissingDepth if the scene
// needs depth and none is given.
ImagePair synth_pair(const Image& clean, const std::optional<Image>& depth,
                     const DegradationSpec& spec);

// sample_spec followed by synth_pair; the spec actually used is returned
// through spec_out when non-null.
ImagePair synth_pair(const Image& clean, const std::optional<Image>& depth, SceneKind kind,
                     const SynthesisRanges& ranges, std::uint64_t seed,
                     DegradationSpec* spec_out = nullptr);

}  // namespace aosr
