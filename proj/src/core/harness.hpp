#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degrade.hpp"
#include "json.hpp"
#include "losses.hpp"
#include "net.hpp"

namespace aosr {

struct ExtractorSpec {
  std::string kind = "surrogate";  // "surrogate" or "file"
  std::uint64_t seed = 7;
  std::filesystem::path path;      // kind == "file"

  FeatureExtractor build() const;
};

struct TrainConfig {
  int epochs = 100;
  double lr = 1e-3;
  std::vector<int> lr_drop_epochs{30, 60, 90};
  double lr_drop_factor = 10.0;
  int batch_size = 4;
  int crop_size = 64;
  std::uint64_t seed = 0;
  // Hard cap on optimizer steps across all epochs; 0 means none.
  int max_steps = 0;
  LossWeights loss_weights{};
  NetworkConfig network{};
  std::array<double, 3> scene_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};  // haze, sand, low light
  ExtractorSpec extractor{};
  SynthesisRanges synthesis{};
  // Split scored by run_ablation; falls back to train when it is empty.
  std::string eval_split = "test";

  void validate() const;
};

// Relative paths inside the file (extractor weights, atmospheric-light
// sets) resolve against the config's directory.
TrainConfig load_train_config(const std::filesystem::path& path);
TrainConfig train_config_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
nlohmann::json train_config_to_json(const TrainConfig& cfg);

// Learning rate at 0-based epoch e: lr * factor^-k, k = #{d : e >= d}.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

struct ManifestEntry {
  std::string id;
  std::filesystem::path clean;
  std::optional<std::filesystem::path> depth;
  SceneKind scene = SceneKind::Haze;
  // Exactly one source of degradation: a file on disk, a fixed spec, or
  // neither (spec sampled per epoch from the config's synthesis ranges).
  std::optional<std::filesystem::path> degraded;
  std::optional<DegradationSpec> spec;
  std::string split = "train";
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  // EmptyCorpus naming the first haze/sand entry with neither depth nor a
  // degraded file; InvalidArgument on unknown split tags or on a clean
  // image that appears in both splits.
  void validate() const;
  std::vector<std::size_t> split_indices(const std::string& split) const;
};

// Stored paths are relative to the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

struct ManifestRequest {
  std::array<double, 3> scene_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double test_fraction = 0.0;  // per scene, rounded half up
};

// Shuffles the clean images with `seed` and hands out scene kinds by
// largest-remainder counts. Depth maps are matched by filename.
DatasetManifest build_manifest(const std::filesystem::path& clean_root,
                               const std::optional<std::filesystem::path>& depth_root,
                               const ManifestRequest& request, std::uint64_t seed);

// Largest-remainder apportionment of n items over the given fractions.
std::vector<int> apportion(int n, std::span<const double> fractions);

// The (degraded, clean) pair an entry yields for a given seed.
ImagePair materialize(const ManifestEntry& e, const SynthesisRanges& ranges, std::uint64_t seed);

struct EpochLog {
  int epoch = 0;  // 0-based
  double lr = 0.0;
  int steps = 0;
  double total = 0.0;
  double l1 = 0.0;
  double color = 0.0;
  double cr = 0.0;
};

std::string train_log_csv(const std::vector<EpochLog>& log);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

struct TrainOptions {
  // Written after every epoch when set: checkpoint.aosr and train_log.csv.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochLog&)> on_epoch;
};

TrainResult train(const TrainConfig& config, const DatasetManifest& manifest,
                  const TrainOptions& options = {});

struct PairScore {
  std::string id;
  SceneKind scene = SceneKind::Haze;
  double psnr_degraded = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

// Restores every entry of a split (pairs drawn with the evaluation seed
// derived from `seed`) and scores it against its clean image.
std::vector<PairScore> evaluate_manifest(const Checkpoint& ckpt, const DatasetManifest& manifest,
                                         const std::string& split, const SynthesisRanges& ranges,
                                         std::uint64_t seed);

// Seed used for evaluation pairs of entry `index`.
std::uint64_t eval_pair_seed(std::uint64_t seed, std::size_t index);

struct SweepRow {
  SceneKind scene = SceneKind::Haze;
  double p_a_min = 0.0;
  double p_a_max = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double score = 0.0;  // mean of min-max normalized PSNR and SSIM within the scene
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::array<std::size_t, 3> best{};  // row index of the argmax per scene

  std::string to_csv() const;
};

// Grid file: one "p_a_min p_a_max" pair per line, '#' comments.
std::vector<std::pair<double, double>> read_sweep_grid(const std::filesystem::path& path);

// eval_root/<scene>/{degraded,clean}/*.png for scene in haze, sand, lowlight.
SweepReport ols_sweep(const std::vector<std::pair<double, double>>& grid,
                      const std::filesystem::path& eval_root, double p_min = 0.01,
                      double p_max = 0.99);

enum class AblationKind { Modules, Losses };
AblationKind parse_ablation_kind(const std::string& s);

struct AblationRow {
  std::array<bool, 3> toggles{};  // modules: MEM, CRM, DEM; losses: L1, color, CR
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
};

struct AblationReport {
  AblationKind kind = AblationKind::Modules;
  std::string split;
  std::vector<AblationRow> rows;

  std::string to_csv() const;
};

// Fixed toggle order. Modules (MEM, CRM, DEM): 000, 100, 110, 101, 011, 111.
// Losses (L1, color, CR): 100, 110, 101, 111.
std::vector<std::array<bool, 3>> ablation_rows(AblationKind kind);

// One training run per row; on_row reports progress.
AblationReport run_ablation(AblationKind kind, const TrainConfig& base,
                            const DatasetManifest& manifest,
                            const std::function<void(std::size_t, const AblationRow&)>& on_row = {});

}  // namespace aosr
