#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "checkpoint.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "priors.hpp"
#include "rng.hpp"

namespace aosr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Tags keeping the derived random streams apart.
constexpr std::uint64_t kOrderTag = 1;
constexpr std::uint64_t kPairTag = 2;
constexpr std::uint64_t kCropTag = 3;
constexpr std::uint64_t kEvalTag = 4;
constexpr std::uint64_t kManifestTag = 5;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, path.string() + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  const fs::path abs = fs::absolute(p).lexically_normal();
  const fs::path b = fs::absolute(base).lexically_normal();
  return abs.lexically_proximate(b).generic_string();
}

std::array<double, 2> range_from_json(const json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2 || !(v[0] <= v[1]))
    fail(ErrorCode::InvalidArgument, std::string(what) + " must be [lo, hi] with lo <= hi");
  return {v[0], v[1]};
}

AtmoLightSet atmo_from_json(const json& j, const fs::path& base, const std::string& name) {
  if (j.is_string()) return read_atmo_set(resolve(base, j.get<std::string>()));
  AtmoLightSet s;
  s.name = name;
  for (const auto& e : j) {
    const auto v = e.get<std::vector<double>>();
    if (v.size() != 3) fail(ErrorCode::Format, "atmospheric lights must be [R, G, B]");
    s.entries.push_back({v[0], v[1], v[2]});
  }
  return s;
}

json atmo_to_json(const AtmoLightSet& s) {
  json a = json::array();
  for (const Rgb& e : s.entries) a.push_back(e);
  return a;
}

json spec_to_json(const DegradationSpec& s) {
  return {{"beta", s.beta},
          {"atmo_light", s.atmo_light},
          {"dark_gamma", s.dark_gamma},
          {"illum_scale", s.illum_scale}};
}

DegradationSpec spec_from_json(const json& j, SceneKind kind) {
  DegradationSpec s;
  s.kind = kind;
  s.beta = j.value("beta", s.beta);
  if (j.contains("atmo_light")) s.atmo_light = j.at("atmo_light").get<Rgb>();
  s.dark_gamma = j.value("dark_gamma", s.dark_gamma);
  s.illum_scale = j.value("illum_scale", s.illum_scale);
  s.validate();
  return s;
}

Image random_crop(const Image& img, int y0, int x0, int size) { return crop(img, y0, x0, size, size); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

FeatureExtractor ExtractorSpec::build() const {
  if (kind == "surrogate") return FeatureExtractor::surrogate(seed);
  if (kind == "file") return FeatureExtractor::load(path);
  fail(ErrorCode::InvalidArgument, "unknown extractor kind " + kind);
}

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (!(lr > 0.0)) fail(ErrorCode::InvalidArgument, "lr must be positive");
  if (!(lr_drop_factor > 0.0)) fail(ErrorCode::InvalidArgument, "lr_drop_factor must be positive");
  for (std::size_t i = 0; i < lr_drop_epochs.size(); ++i) {
    if (lr_drop_epochs[i] < 1 || lr_drop_epochs[i] >= epochs)
      fail(ErrorCode::InvalidArgument, "lr drop epochs must lie in [1, epochs)");
    if (i > 0 && lr_drop_epochs[i] <= lr_drop_epochs[i - 1])
      fail(ErrorCode::InvalidArgument, "lr drop epochs must be strictly increasing");
  }
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (crop_size < 4 || crop_size % 4 != 0)
    fail(ErrorCode::InvalidArgument, "crop_size must be a positive multiple of 4");
  if (max_steps < 0) fail(ErrorCode::InvalidArgument, "max_steps must be >= 0");
  double sum = 0.0;
  for (double f : scene_mix) {
    if (!(f >= 0.0)) fail(ErrorCode::InvalidArgument, "scene_mix fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "scene_mix must sum to 1");
  if (eval_split != "train" && eval_split != "test")
    fail(ErrorCode::InvalidArgument, "eval_split must be train or test");
  if (extractor.kind != "surrogate" && extractor.kind != "file")
    fail(ErrorCode::InvalidArgument, "extractor kind must be surrogate or file");
  loss_weights.validate();
  network.validate();
  synthesis.haze.validate(SceneKind::Haze);
  synthesis.sand.validate(SceneKind::Sand);
}

TrainConfig train_config_from_json(const json& j, const fs::path& base_dir) {
  TrainConfig c;
  // "manifest" is read by the ablation front end, not here.
  require_known_keys(j,
                     {"epochs", "lr", "lr_drop_epochs", "lr_drop_factor", "batch_size", "crop_size", "seed",
                      "max_steps", "eval_split", "loss_weights", "network", "scene_mix", "extractor",
                      "synthesis", "manifest"},
                     "training config");
  if (j.contains("loss_weights")) require_known_keys(j.at("loss_weights"), {"l1", "color", "cr"}, "loss_weights");
  if (j.contains("scene_mix")) require_known_keys(j.at("scene_mix"), {"haze", "sand", "lowlight"}, "scene_mix");
  if (j.contains("extractor")) require_known_keys(j.at("extractor"), {"kind", "seed", "path"}, "extractor");
  if (j.contains("synthesis"))
    require_known_keys(j.at("synthesis"), {"beta", "dark_gamma", "illum_scale", "haze_atmo", "sand_atmo"},
                       "synthesis");
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    if (j.contains("lr_drop_epochs")) c.lr_drop_epochs = j.at("lr_drop_epochs").get<std::vector<int>>();
    c.lr_drop_factor = j.value("lr_drop_factor", c.lr_drop_factor);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.crop_size = j.value("crop_size", c.crop_size);
    c.seed = j.value("seed", c.seed);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.eval_split = j.value("eval_split", c.eval_split);
    if (j.contains("loss_weights")) {
      const json& w = j.at("loss_weights");
      c.loss_weights.l1 = w.value("l1", c.loss_weights.l1);
      c.loss_weights.color = w.value("color", c.loss_weights.color);
      c.loss_weights.cr = w.value("cr", c.loss_weights.cr);
    }
    if (j.contains("network")) c.network = config_from_json(j.at("network"));
    if (j.contains("scene_mix")) {
      const json& m = j.at("scene_mix");
      c.scene_mix = {m.value("haze", 0.0), m.value("sand", 0.0), m.value("lowlight", 0.0)};
    }
    if (j.contains("extractor")) {
      const json& e = j.at("extractor");
      c.extractor.kind = e.value("kind", c.extractor.kind);
      c.extractor.seed = e.value("seed", c.extractor.seed);
      if (e.contains("path")) c.extractor.path = resolve(base_dir, e.at("path").get<std::string>());
    }
    if (j.contains("synthesis")) {
      const json& s = j.at("synthesis");
      if (s.contains("beta")) c.synthesis.beta = range_from_json(s.at("beta"), "beta");
      if (s.contains("dark_gamma"))
        c.synthesis.dark_gamma = range_from_json(s.at("dark_gamma"), "dark_gamma");
      if (s.contains("illum_scale"))
        c.synthesis.illum_scale = range_from_json(s.at("illum_scale"), "illum_scale");
      if (s.contains("haze_atmo")) c.synthesis.haze = atmo_from_json(s.at("haze_atmo"), base_dir, "haze");
      if (s.contains("sand_atmo")) c.synthesis.sand = atmo_from_json(s.at("sand_atmo"), base_dir, "sand");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("bad training config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const fs::path& path) {
  return train_config_from_json(read_json_file(path), path.parent_path());
}

json train_config_to_json(const TrainConfig& c) {
  json ex = {{"kind", c.extractor.kind}, {"seed", c.extractor.seed}};
  if (c.extractor.kind == "file") ex["path"] = c.extractor.path.generic_string();
  return {{"epochs", c.epochs},
          {"lr", c.lr},
          {"lr_drop_epochs", c.lr_drop_epochs},
          {"lr_drop_factor", c.lr_drop_factor},
          {"batch_size", c.batch_size},
          {"crop_size", c.crop_size},
          {"seed", c.seed},
          {"max_steps", c.max_steps},
          {"eval_split", c.eval_split},
          {"loss_weights",
           {{"l1", c.loss_weights.l1}, {"color", c.loss_weights.color}, {"cr", c.loss_weights.cr}}},
          {"network", config_to_json(c.network)},
          {"scene_mix",
           {{"haze", c.scene_mix[0]}, {"sand", c.scene_mix[1]}, {"lowlight", c.scene_mix[2]}}},
          {"extractor", ex},
          {"synthesis",
           {{"beta", c.synthesis.beta},
            {"dark_gamma", c.synthesis.dark_gamma},
            {"illum_scale", c.synthesis.illum_scale},
            {"haze_atmo", atmo_to_json(c.synthesis.haze)},
            {"sand_atmo", atmo_to_json(c.synthesis.sand)}}}};
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  const auto k = std::count_if(cfg.lr_drop_epochs.begin(), cfg.lr_drop_epochs.end(),
                               [&](int d) { return epoch >= d; });
  // Dividing by the exact power keeps 1e-3 / 10^k on the nearest doubles of 1e-4, 1e-5, ...
  return cfg.lr / std::pow(cfg.lr_drop_factor, static_cast<double>(k));
}

// ---------------------------------------------------------------------------
// Manifests

void DatasetManifest::validate() const {
  std::map<std::string, std::string> split_of;
  for (const ManifestEntry& e : entries) {
    if (e.split != "train" && e.split != "test")
      fail(ErrorCode::InvalidArgument, "entry " + e.id + " has unknown split '" + e.split + "'");
    if (e.scene != SceneKind::LowLight && !e.depth && !e.degraded)
      fail(ErrorCode::EmptyCorpus, "entry " + e.id + " (" + e.clean.string() + ", " +
                                       std::string(scene_name(e.scene)) +
                                       ") has neither a depth map nor a degraded file");
    if (e.degraded && e.spec)
      fail(ErrorCode::InvalidArgument, "entry " + e.id + " sets both a degraded file and a spec");
    const std::string key = e.clean.lexically_normal().generic_string();
    auto [it, inserted] = split_of.emplace(key, e.split);
    if (!inserted && it->second != e.split)
      fail(ErrorCode::InvalidArgument, e.clean.string() + " appears in both train and test");
  }
}

std::vector<std::size_t> DatasetManifest::split_indices(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].split == split) out.push_back(i);
  return out;
}

DatasetManifest load_manifest(const fs::path& path) {
  const json j = read_json_file(path);
  const fs::path base = path.parent_path();
  DatasetManifest m;
  try {
    for (const json& e : j.at("entries")) {
      ManifestEntry me;
      me.clean = resolve(base, e.at("clean").get<std::string>());
      me.id = e.value("id", me.clean.stem().string());
      me.scene = parse_scene(e.at("scene").get<std::string>());
      me.split = e.value("split", me.split);
      if (e.contains("depth") && !e.at("depth").is_null())
        me.depth = resolve(base, e.at("depth").get<std::string>());
      if (e.contains("degraded") && !e.at("degraded").is_null())
        me.degraded = resolve(base, e.at("degraded").get<std::string>());
      if (e.contains("spec") && !e.at("spec").is_null()) me.spec = spec_from_json(e.at("spec"), me.scene);
      m.entries.push_back(std::move(me));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  json entries = json::array();
  for (const ManifestEntry& e : m.entries) {
    json j = {{"id", e.id},
              {"clean", relative_to(e.clean, base)},
              {"scene", scene_name(e.scene)},
              {"split", e.split}};
    j["depth"] = e.depth ? json(relative_to(*e.depth, base)) : json(nullptr);
    if (e.degraded) j["degraded"] = relative_to(*e.degraded, base);
    if (e.spec) j["spec"] = spec_to_json(*e.spec);
    entries.push_back(std::move(j));
  }
  write_text_atomic(path, json{{"format", "aosr-manifest"}, {"version", 1}, {"entries", entries}}.dump(2) + "\n");
}

std::vector<int> apportion(int n, std::span<const double> fractions) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) fail(ErrorCode::InvalidArgument, "fractions must be non-negative");
    sum += f;
  }
  if (!(sum > 0.0)) fail(ErrorCode::InvalidArgument, "fractions must not all be zero");
  std::vector<int> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> rem;
  int used = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = n * fractions[i] / sum;
    counts[i] = static_cast<int>(std::floor(exact + 1e-9));
    used += counts[i];
    rem.emplace_back(exact - counts[i], i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; used < n; ++k, ++used) ++counts[rem[k % rem.size()].second];
  return counts;
}

DatasetManifest build_manifest(const fs::path& clean_root, const std::optional<fs::path>& depth_root,
                               const ManifestRequest& request, std::uint64_t seed) {
  if (!fs::is_directory(clean_root)) fail(ErrorCode::Io, "no such directory: " + clean_root.string());
  if (depth_root && !fs::is_directory(*depth_root))
    fail(ErrorCode::Io, "no such directory: " + depth_root->string());
  if (!(request.test_fraction >= 0.0 && request.test_fraction < 1.0))
    fail(ErrorCode::InvalidArgument, "test_fraction must lie in [0, 1)");
  auto files = list_png(clean_root);
  if (files.empty()) fail(ErrorCode::EmptyCorpus, "no PNG images in " + clean_root.string());
  Rng rng(derive_seed(seed, {kManifestTag}));
  rng.shuffle(files.begin(), files.end());
  const auto counts = apportion(static_cast<int>(files.size()), request.scene_mix);

  DatasetManifest m;
  std::size_t next = 0;
  for (std::size_t s = 0; s < kAllScenes.size(); ++s) {
    const int n_test = static_cast<int>(std::floor(request.test_fraction * counts[s] + 0.5));
    for (int k = 0; k < counts[s]; ++k, ++next) {
      ManifestEntry e;
      e.clean = files[next];
      e.id = e.clean.stem().string();
      e.scene = kAllScenes[s];
      e.split = k >= counts[s] - n_test ? "test" : "train";
      if (depth_root) {
        const fs::path d = *depth_root / e.clean.filename();
        if (fs::exists(d)) e.depth = d;
      }
      m.entries.push_back(std::move(e));
    }
  }
  m.validate();
  return m;
}

ImagePair materialize(const ManifestEntry& e, const SynthesisRanges& ranges, std::uint64_t seed) {
  Image clean = load_image(e.clean);
  if (e.degraded) {
    Image deg = load_image(*e.degraded);
    if (!deg.same_shape(clean))
      fail(ErrorCode::PairMismatch, "degraded and clean sizes differ for " + e.id);
    return {std::move(deg), std::move(clean)};
  }
  std::optional<Image> depth;
  if (e.depth) depth = load_gray(*e.depth);
  if (e.spec) return synth_pair(clean, depth, *e.spec);
  return synth_pair(clean, depth, e.scene, ranges, seed);
}

// ---------------------------------------------------------------------------
// Training

std::string train_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,lr,total,l1,color,cr\n" << std::setprecision(17);
  for (const EpochLog& e : log)
    out << e.epoch << ',' << e.lr << ',' << e.total << ',' << e.l1 << ',' << e.color << ',' << e.cr << '\n';
  return out.str();
}

namespace {

struct Batch {
  Tensor degraded;
  Tensor clean;
};

Batch make_batch(const TrainConfig& cfg, const DatasetManifest& m, const std::vector<std::size_t>& ids,
                 int epoch) {
  std::vector<Image> deg, cln;
  for (std::size_t i : ids) {
    const ManifestEntry& e = m.entries[i];
    ImagePair p = materialize(e, cfg.synthesis, derive_seed(cfg.seed, {kPairTag, std::uint64_t(epoch), i}));
    const int c = cfg.crop_size;
    if (p.clean.height < c || p.clean.width < c)
      fail(ErrorCode::TooSmall, "image " + e.id + " is smaller than the crop size " + std::to_string(c));
    Rng rng(derive_seed(cfg.seed, {kCropTag, std::uint64_t(epoch), i}));
    const int y0 = static_cast<int>(rng.index(static_cast<std::size_t>(p.clean.height - c + 1)));
    const int x0 = static_cast<int>(rng.index(static_cast<std::size_t>(p.clean.width - c + 1)));
    deg.push_back(random_crop(p.degraded, y0, x0, c));
    cln.push_back(random_crop(p.clean, y0, x0, c));
  }
  return {stack(deg), stack(cln)};
}

struct AdamState {
  Tensor m, v;
};

}  // namespace

TrainResult train(const TrainConfig& cfg, const DatasetManifest& manifest, const TrainOptions& opts) {
  cfg.validate();
  manifest.validate();
  const auto train_ids = manifest.split_indices("train");
  if (train_ids.empty()) fail(ErrorCode::EmptyCorpus, "manifest has no train entries");
  const FeatureExtractor extractor = cfg.extractor.build();

  TrainResult res;
  res.checkpoint = init_weights(cfg.network, cfg.seed);
  res.checkpoint.meta = {0, {cfg.loss_weights.l1, cfg.loss_weights.color, cfg.loss_weights.cr}, cfg.seed};
  ParamMap& params = res.checkpoint.params;
  std::map<std::string, AdamState> adam;
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  if (opts.out_dir) fs::create_directories(*opts.out_dir);
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.max_steps > 0 && step >= cfg.max_steps) break;
    const double lr = lr_at_epoch(cfg, epoch);
    std::vector<std::size_t> order = train_ids;
    Rng(derive_seed(cfg.seed, {kOrderTag, std::uint64_t(epoch)})).shuffle(order.begin(), order.end());
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size)
      batches.emplace_back(order.begin() + b, order.begin() + std::min(order.size(), b + cfg.batch_size));

    // Batches depend only on derived seeds, so loading one ahead on a
    // worker thread leaves results unchanged.
    auto load = [&](std::size_t b) {
      return std::async(std::launch::async, make_batch, std::cref(cfg), std::cref(manifest),
                        std::cref(batches[b]), epoch);
    };
    std::future<Batch> pending = load(0);
    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      Batch batch = pending.get();
      const bool more = b + 1 < batches.size() && !(cfg.max_steps > 0 && step + 1 >= cfg.max_steps);
      if (more) pending = load(b + 1);

      Network net(cfg.network, params, true);
      ag::Var out = net.forward(ag::constant(batch.degraded));
      LossBreakdown bd;
      ag::Var loss = total_loss(out, batch.degraded, batch.clean, cfg.loss_weights, extractor, &bd);
      if (!std::isfinite(bd.total))
        fail(ErrorCode::NonFiniteLoss, "non-finite loss at step " + std::to_string(step) + " (epoch " +
                                           std::to_string(epoch) + ", batch " + std::to_string(b) + ")");
      ag::backward(loss);
      ++step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (const auto& [name, var] : net.bound()) {
        if (var->grad.numel() == 0) continue;
        Tensor& p = params.at(name);
        auto [it, fresh] = adam.try_emplace(name);
        if (fresh) {
          it->second.m = Tensor(p.shape());
          it->second.v = Tensor(p.shape());
        }
        double* m = it->second.m.data();
        double* v = it->second.v.data();
        double* w = p.data();
        const double* g = var->grad.data();
        for (std::size_t k = 0; k < p.numel(); ++k) {
          m[k] = b1 * m[k] + (1.0 - b1) * g[k];
          v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
          w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
        }
      }
      ++log.steps;
      log.total += bd.total;
      log.l1 += bd.l1;
      log.color += bd.color;
      log.cr += bd.cr;
      if (!more) break;
    }
    const double n = log.steps;
    log.total /= n;
    log.l1 /= n;
    log.color /= n;
    log.cr /= n;
    res.log.push_back(log);
    res.checkpoint.meta.epochs = epoch + 1;
    if (opts.out_dir) {
      save_checkpoint(res.checkpoint, *opts.out_dir / "checkpoint.aosr");
      write_text_atomic(*opts.out_dir / "train_log.csv", train_log_csv(res.log));
    }
    if (opts.on_epoch) opts.on_epoch(log);
  }
  return res;
}

std::uint64_t eval_pair_seed(std::uint64_t seed, std::size_t index) {
  return derive_seed(seed, {kEvalTag, index});
}

std::vector<PairScore> evaluate_manifest(const Checkpoint& ckpt, const DatasetManifest& manifest,
                                         const std::string& split, const SynthesisRanges& ranges,
                                         std::uint64_t seed) {
  std::vector<PairScore> out;
  for (std::size_t i : manifest.split_indices(split)) {
    const ManifestEntry& e = manifest.entries[i];
    const ImagePair p = materialize(e, ranges, eval_pair_seed(seed, i));
    const Image r = aosrnet_forward(p.degraded, ckpt);
    out.push_back({e.id, e.scene, psnr(p.degraded, p.clean), psnr(r, p.clean), ssim(r, p.clean)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// OLS sweep

std::vector<std::pair<double, double>> read_sweep_grid(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open sweep grid " + path.string());
  std::vector<std::pair<double, double>> grid;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ss(line);
    double a, b;
    if (!(ss >> a)) continue;
    std::string rest;
    if (!(ss >> b) || (ss >> rest))
      fail(ErrorCode::Format, path.string() + ":" + std::to_string(lineno) + ": expected 'p_a_min p_a_max'");
    grid.emplace_back(a, b);
  }
  if (grid.empty()) fail(ErrorCode::EmptyInput, "sweep grid " + path.string() + " is empty");
  return grid;
}

SweepReport ols_sweep(const std::vector<std::pair<double, double>>& grid, const fs::path& eval_root,
                      double p_min, double p_max) {
  if (grid.empty()) fail(ErrorCode::EmptyInput, "sweep grid is empty");
  SweepReport rep;
  for (std::size_t s = 0; s < kAllScenes.size(); ++s) {
    const fs::path dir = eval_root / std::string(scene_name(kAllScenes[s]));
    const auto degraded = list_png(dir / "degraded");
    if (degraded.empty()) fail(ErrorCode::EmptyInput, "no degraded images under " + dir.string());
    std::vector<ImagePair> pairs;
    for (const fs::path& d : degraded) {
      const fs::path c = dir / "clean" / d.filename();
      if (!fs::exists(c)) fail(ErrorCode::PairMismatch, "no clean image for " + d.string());
      pairs.push_back({load_image(d), load_image(c)});
    }
    const std::size_t first = rep.rows.size();
    for (const auto& [a, b] : grid) {
      const OLSParams params{p_min, p_max, a, b};
      params.validate();
      double ps = 0.0, ss = 0.0;
      for (const ImagePair& p : pairs) {
        const Image r = optimized_linear_stretch(p.degraded, params);
        ps += psnr(r, p.clean);
        ss += ssim(r, p.clean);
      }
      rep.rows.push_back({kAllScenes[s], a, b, ps / pairs.size(), ss / pairs.size(), 0.0});
    }
    auto norm = [&](double SweepRow::*field) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t i = first; i < rep.rows.size(); ++i) {
        lo = std::min(lo, rep.rows[i].*field);
        hi = std::max(hi, rep.rows[i].*field);
      }
      std::vector<double> out;
      for (std::size_t i = first; i < rep.rows.size(); ++i)
        out.push_back(hi > lo ? (rep.rows[i].*field - lo) / (hi - lo) : 1.0);
      return out;
    };
    const auto np = norm(&SweepRow::psnr);
    const auto ns = norm(&SweepRow::ssim);
    rep.best[s] = first;
    for (std::size_t i = first; i < rep.rows.size(); ++i) {
      rep.rows[i].score = 0.5 * (np[i - first] + ns[i - first]);
      if (rep.rows[i].score > rep.rows[rep.best[s]].score) rep.best[s] = i;
    }
  }
  return rep;
}

std::string SweepReport::to_csv() const {
  std::ostringstream out;
  out << "scene,p_a_min,p_a_max,psnr,ssim,score,best\n" << std::setprecision(10);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    const bool is_best = std::find(best.begin(), best.end(), i) != best.end();
    out << scene_name(r.scene) << ',' << r.p_a_min << ',' << r.p_a_max << ',' << r.psnr << ','
        << r.ssim << ',' << r.score << ',' << (is_best ? 1 : 0) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Ablations

AblationKind parse_ablation_kind(const std::string& s) {
  if (s == "modules") return AblationKind::Modules;
  if (s == "losses") return AblationKind::Losses;
  fail(ErrorCode::InvalidArgument, "ablation kind must be modules or losses, got '" + s + "'");
}

std::vector<std::array<bool, 3>> ablation_rows(AblationKind kind) {
  if (kind == AblationKind::Modules)
    return {{false, false, false}, {true, false, false}, {true, true, false},
            {true, false, true},   {false, true, true},  {true, true, true}};
  return {{true, false, false}, {true, true, false}, {true, false, true}, {true, true, true}};
}

AblationReport run_ablation(AblationKind kind, const TrainConfig& base, const DatasetManifest& manifest,
                            const std::function<void(std::size_t, const AblationRow&)>& on_row) {
  base.validate();
  AblationReport rep;
  rep.kind = kind;
  rep.split = manifest.split_indices(base.eval_split).empty() ? "train" : base.eval_split;
  const auto rows = ablation_rows(kind);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    TrainConfig cfg = base;
    const auto& t = rows[i];
    if (kind == AblationKind::Modules) {
      cfg.network.use_mem = t[0];
      cfg.network.use_crm = t[1];
      cfg.network.use_dem = t[2];
    } else {
      if (!t[0]) cfg.loss_weights.l1 = 0.0;
      if (!t[1]) cfg.loss_weights.color = 0.0;
      if (!t[2]) cfg.loss_weights.cr = 0.0;
    }
    const TrainResult tr = train(cfg, manifest);
    const auto scores = evaluate_manifest(tr.checkpoint, manifest, rep.split, cfg.synthesis, cfg.seed);
    std::vector<double> p, s;
    for (const PairScore& sc : scores) {
      p.push_back(sc.psnr);
      s.push_back(sc.ssim);
    }
    const MeanStd pm = mean_std(p), sm = mean_std(s);
    rep.rows.push_back({t, pm.mean, pm.std, sm.mean, sm.std});
    if (on_row) on_row(i, rep.rows.back());
  }
  return rep;
}

std::string AblationReport::to_csv() const {
  std::ostringstream out;
  out << (kind == AblationKind::Modules ? "MEM,CRM,DEM" : "L1,color,CR")
      << ",split,psnr_mean,psnr_std,ssim_mean,ssim_std,psnr,ssim\n";
  for (const AblationRow& r : rows) {
    std::ostringstream line;
    line << std::setprecision(10) << r.toggles[0] << ',' << r.toggles[1] << ',' << r.toggles[2] << ','
         << split << ',' << r.psnr_mean << ',' << r.psnr_std << ',' << r.ssim_mean << ',' << r.ssim_std
         << ',' << format_mean_std({r.psnr_mean, r.psnr_std}) << ','
         << format_mean_std({r.ssim_mean, r.ssim_std});
    out << line.str() << '\n';
  }
  return out.str();
}

}  // namespace aosr
