// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aosr/aosr.h"
#include "checkpoint.hpp"
#include "degrade.hpp"
#include "harness.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "net.hpp"
#include "oracles.hpp"
#include "priors.hpp"
#include "rng.hpp"

using namespace aosr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path scratch(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("aosr_accept_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path kData = AOSR_TEST_DATA;

// The four 64x64 desk images with fixed degradation specs for one scene.
DatasetManifest desk_manifest(SceneKind kind, std::uint64_t seed) {
  DatasetManifest m;
  SynthesisRanges ranges;
  std::uint64_t i = 0;
  for (const fs::path& clean : list_png(kData / "clean")) {
    ManifestEntry e;
    e.id = clean.stem().string();
    e.clean = clean;
    e.depth = kData / "depth" / clean.filename();
    e.scene = kind;
    e.spec = sample_spec(kind, ranges, derive_seed(seed, {static_cast<std::uint64_t>(kind), i++}));
    m.entries.push_back(e);
  }
  return m;
}

// ---------------------------------------------------------------------------

Outcome c1_ols_oracle() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const Image img = oracle::random_image(64, 64, 3, 1000 + i);
    for (int k = 0; k < 5; ++k) {
      const double p_min = 0.2 * u(gen);
      const double p_max = 0.8 + 0.2 * u(gen);
      const OLSParams p{p_min, p_max, 0.5 * u(gen), 0.5 * u(gen)};
      const Image got = optimized_linear_stretch(img, p);
      const Image want = oracle::ols(img, p);
      for (std::size_t j = 0; j < got.size(); ++j) worst = std::max(worst, std::fabs(got.data[j] - want.data[j]));
    }
  }
  return {worst <= 1e-6, fmt("max abs error %.3g over 500 cases", worst)};
}

Outcome c2_gamma_laws() {
  double worst = 0;
  bool fixed = true;
  const double gs[] = {0.25, 0.5, 2.0, 4.0, 1.7};
  for (int i = 0; i < 10; ++i) {
    const Image img = oracle::random_image(32, 32, 3, 200 + i);
    for (double a : gs)
      for (double b : gs) {
        const Image lhs = gamma_correct(gamma_correct(img, a), b);
        const Image rhs = gamma_correct(img, a * b);
        for (std::size_t j = 0; j < img.size(); ++j) worst = std::max(worst, std::fabs(lhs.data[j] - rhs.data[j]));
      }
  }
  Image ends(1, 2, 3);
  for (int c = 0; c < 3; ++c) ends.at(0, 1, c) = 1.0;
  for (double g : gs) fixed = fixed && gamma_correct(ends, g).data == ends.data;
  const auto bank = gamma_bank_apply(oracle::random_image(8, 8, 3, 3), GammaBank{});
  const bool ok = worst <= 1e-9 && fixed && bank.size() == 4;
  return {ok, fmt("composition error %.3g, fixed points %s, bank outputs %zu", worst, fixed ? "exact" : "broken",
                  bank.size())};
}

Outcome c3_loss_identities() {
  const FeatureExtractor fx = FeatureExtractor::surrogate();
  double scale_err = 0, cr_err = 0, zero_max = 0;
  for (int i = 0; i < 10; ++i) {
    const Image x = oracle::random_image(16, 16, 3, 300 + i, 0.05, 1.0);
    for (double a : {0.5, 0.3, 2.0}) {
      Image ax = x;
      for (double& v : ax.data) v *= a;
      scale_err = std::max(scale_err, std::fabs(color_loss(ax, x)));
    }
    const Image truth = oracle::random_image(16, 16, 3, 400 + i);
    const Image degraded = oracle::random_image(16, 16, 3, 500 + i);
    cr_err = std::max(cr_err, std::fabs(cr_loss(degraded, degraded, truth, fx) - 1.46875));

    LossBreakdown bd;
    const Tensor t = to_tensor(truth);
    const ag::Var l = total_loss(ag::constant(t), to_tensor(degraded), t, LossWeights{}, fx, &bd);
    zero_max = std::max({zero_max, std::fabs(l->value[0]), std::fabs(bd.l1), std::fabs(bd.color), std::fabs(bd.cr)});
  }
  const double unit = combine_losses(1, 1, 1, LossWeights{});
  const bool ok = scale_err <= 1e-9 && cr_err <= 1e-9 && unit == 1.0 && zero_max == 0.0;
  return {ok, fmt("color scale err %.3g, cr(degraded) err %.3g, total(1,1,1)=%.17g, max at truth %.3g", scale_err,
                  cr_err, unit, zero_max)};
}

Outcome c4_gradients() {
  constexpr int kSamples = 192;
  const FeatureExtractor fx = FeatureExtractor::surrogate();
  const Tensor truth = to_tensor(oracle::random_image(8, 8, 3, 600));
  const Tensor degraded = to_tensor(oracle::random_image(8, 8, 3, 601));
  const Tensor restored = to_tensor(oracle::random_image(8, 8, 3, 602));
  std::string detail;
  bool ok = true;
  auto record = [&](const char* name, const oracle::GradCheck& g) {
    ok = ok && g.checked > 0 && g.pass_rate() >= 0.99;
    detail += fmt("%s %d/%d (%d nonzero); ", name, g.passed, g.checked, g.nonzero);
    if (g.pass_rate() < 0.99) detail += "worst " + g.worst_where + "; ";
  };
  using Build = std::function<ag::Var(const std::vector<ag::Var>&)>;
  record("l1", oracle::check_gradients(Build([&](const auto& v) { return l1_loss(v[0], truth); }), {restored},
                                       {"restored"}, kSamples, 1));
  record("color", oracle::check_gradients(Build([&](const auto& v) { return color_loss(v[0], truth); }),
                                          {restored}, {"restored"}, kSamples, 2));
  record("cr", oracle::check_gradients(Build([&](const auto& v) { return cr_loss(v[0], degraded, truth, fx); }),
                                       {restored}, {"restored"}, kSamples, 3));

  NetworkConfig cfg;
  const Checkpoint ck = init_weights(cfg, 11);

  // SRB on an 8x8 feature map, through all of its parameters.
  {
    ParamMap params = ck.params;
    const Tensor x0 = oracle::random_tensor({1, 16, 8, 8}, 12);
    const Tensor target = oracle::random_tensor({1, 16, 8, 8}, 13);
    Network net(cfg, params, true);
    ag::Var x = ag::parameter(x0);
    ag::backward(ag::mean_abs_diff(net.srb("dem.srb", x), target));
    std::vector<std::string> names{"x"};
    std::vector<Tensor> leaves{x0}, grads{x->grad};
    for (const auto& [n, var] : net.bound()) {
      names.push_back(n);
      leaves.push_back(params.at(n));
      grads.push_back(var->grad);
    }
    auto eval = [&](const std::vector<Tensor>& ls) {
      ParamMap pm;
      for (std::size_t i = 1; i < ls.size(); ++i) pm.emplace(names[i], ls[i]);
      Network n2(cfg, pm, false);
      return ag::mean_abs_diff(n2.srb("dem.srb", ag::constant(ls[0])), target)->value[0];
    };
    record("srb", oracle::compare_with_fd(leaves, grads, eval, names, 24, 14));
  }

  // Whole network plus total loss, OLS thresholds replayed from the
  // analytic pass while finite differences perturb the inputs.
  {
    ParamMap params = ck.params;
    const Tensor input = to_tensor(oracle::random_image(8, 8, 3, 15));
    OlsThresholdCache cache;
    Network net(cfg, params, true);
    net.set_ols_cache(&cache);
    ag::Var in = ag::parameter(input);
    ag::Var loss = total_loss(net.forward(in), degraded, truth, LossWeights{}, fx);
    ag::backward(loss);
    std::vector<std::string> names{"input"};
    std::vector<Tensor> leaves{input}, grads{in->grad};
    for (const auto& [n, var] : net.bound()) {
      names.push_back(n);
      leaves.push_back(params.at(n));
      grads.push_back(var->grad);
    }
    cache.replay = true;
    auto eval = [&](const std::vector<Tensor>& ls) {
      ParamMap pm;
      for (std::size_t i = 1; i < ls.size(); ++i) pm.emplace(names[i], ls[i]);
      Network n2(cfg, pm, false);
      n2.set_ols_cache(&cache);
      return total_loss(n2.forward(ag::constant(ls[0])), degraded, truth, LossWeights{}, fx)->value[0];
    };
    record("network+total", oracle::compare_with_fd(leaves, grads, eval, names, 4, 16));
  }
  return {ok, detail};
}

Outcome c5_synthesis() {
  double worst = 0;
  int used = 0;
  bool darker = true;
  for (int i = 0; i < 10; ++i) {
    const Image clean = oracle::random_image(32, 32, 3, 700 + i);
    const Image depth = oracle::random_image(32, 32, 1, 800 + i, 0.0, 3.0);
    const double beta = 0.5 + 0.3 * i;
    const Rgb a{0.7 + 0.02 * i, 0.7 + 0.02 * i, 0.68 + 0.02 * i};
    const Image hazy = synth_scatter(clean, depth, beta, a);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        const double t = std::exp(-beta * depth.at(y, x, 0));
        if (t <= 1e-3) continue;
        ++used;
        for (int c = 0; c < 3; ++c) {
          const double j = (hazy.at(y, x, c) - a[c] * (1.0 - t)) / t;
          worst = std::max(worst, std::fabs(j - clean.at(y, x, c)));
        }
      }
    const Image dark = synth_lowlight(clean, 1.2 + 0.3 * i, 0.3 + 0.07 * i);
    for (std::size_t k = 0; k < clean.size(); ++k) darker = darker && dark.data[k] <= clean.data[k];
  }
  return {worst <= 1e-6 && darker,
          fmt("inversion error %.3g over %d pixels, low light %s", worst, used, darker ? "<= clean" : "exceeds clean")};
}

Outcome c6_metrics() {
  const double p20 = psnr(Image(8, 8, 3, 0.5), Image(8, 8, 3, 0.6));
  const double p0 = psnr(Image(8, 8, 3, 0.0), Image(8, 8, 3, 1.0));
  double worst = 0;
  bool self = true;
  for (int i = 0; i < 20; ++i) {
    const Image a = oracle::random_image(32, 32, 3, 900 + i);
    Image b = a;
    const Image n = oracle::random_image(32, 32, 3, 950 + i, -0.3, 0.3);
    for (std::size_t k = 0; k < b.size(); ++k) b.data[k] = std::clamp(b.data[k] + n.data[k] * (i % 4) / 3.0, 0.0, 1.0);
    if (i % 5 == 4) b = oracle::random_image(32, 32, 3, 990 + i);
    worst = std::max(worst, std::fabs(ssim(a, b) - oracle::ssim(a, b)));
    self = self && ssim(a, a) == 1.0;
  }
  const bool ok = std::fabs(p20 - 20.0) <= 1e-9 && std::fabs(p0) <= 1e-9 && worst <= 1e-3 && self;
  return {ok, fmt("psnr(mse .01)=%.12f psnr(mse 1)=%.3g ssim err %.3g ssim(a,a)%s", p20, p0, worst,
                  self ? "=1" : "!=1")};
}

Outcome c7_overfit() {
  // One all-in-one model over the 4 desk pairs of every scene kind.
  DatasetManifest m;
  for (SceneKind kind : kAllScenes)
    for (ManifestEntry e : desk_manifest(kind, 77).entries) {
      e.id += "_" + std::string(scene_name(kind));
      m.entries.push_back(e);
    }
  TrainConfig cfg;
  cfg.network.base_channels = 8;
  cfg.network.edfm_channels = {8, 16, 32};
  cfg.crop_size = 64;
  cfg.batch_size = 4;
  cfg.epochs = 500;
  cfg.max_steps = 500;
  cfg.lr = 1e-3;
  cfg.lr_drop_epochs = {};
  cfg.seed = 7;
  const TrainResult tr = train(cfg, m);

  std::string detail;
  bool ok = true;
  for (SceneKind kind : kAllScenes) {
    double worst_gain = 1e9, mean_gain = 0;
    int n = 0;
    for (const ManifestEntry& e : m.entries) {
      if (e.scene != kind) continue;
      const ImagePair p = materialize(e, cfg.synthesis, 0);
      const double gain = psnr(aosrnet_forward(p.degraded, tr.checkpoint), p.clean) - psnr(p.degraded, p.clean);
      worst_gain = std::min(worst_gain, gain);
      mean_gain += gain;
      ++n;
    }
    mean_gain /= n;
    ok = ok && worst_gain >= 3.0;
    detail += fmt("%s gain mean %.2f dB min %.2f dB; ", std::string(scene_name(kind)).c_str(), mean_gain,
                  worst_gain);
  }
  return {ok, detail};
}

Outcome c8_determinism() {
  const fs::path dir = scratch("determinism");
  DatasetManifest m = desk_manifest(SceneKind::Haze, 5);
  for (auto& e : m.entries) e.spec.reset();  // spec drawn per epoch from the seed
  save_manifest(m, dir / "manifest.json");
  TrainConfig cfg;
  cfg.network.base_channels = 4;
  cfg.crop_size = 32;
  cfg.batch_size = 2;
  cfg.epochs = 3;
  cfg.lr_drop_epochs = {2};
  cfg.seed = 99;
  std::ofstream(dir / "config.json") << train_config_to_json(cfg).dump(2);
  const std::string c = (dir / "config.json").string(), mf = (dir / "manifest.json").string();
  const std::string o1 = (dir / "run1").string(), o2 = (dir / "run2").string();
  if (aosr_train(c.c_str(), mf.c_str(), o1.c_str(), nullptr, nullptr) != AOSR_OK ||
      aosr_train(c.c_str(), mf.c_str(), o2.c_str(), nullptr, nullptr) != AOSR_OK)
    return {false, std::string("training failed: ") + aosr_last_error()};
  const std::string k1 = slurp(dir / "run1" / "checkpoint.aosr"), k2 = slurp(dir / "run2" / "checkpoint.aosr");
  const std::string l1 = slurp(dir / "run1" / "train_log.csv"), l2 = slurp(dir / "run2" / "train_log.csv");
  const bool ok = !k1.empty() && k1 == k2 && !l1.empty() && l1 == l2;
  fs::remove_all(dir);
  return {ok, fmt("checkpoint %zu bytes %s, log %s", k1.size(), k1 == k2 ? "identical" : "differs",
                  l1 == l2 ? "identical" : "differs")};
}

Outcome c9_ablation() {
  using R = std::array<bool, 3>;
  const std::vector<R> t6{{false, false, false}, {true, false, false}, {true, true, false},
                          {true, false, true},   {false, true, true},  {true, true, true}};
  const std::vector<R> t7{{true, false, false}, {true, true, false}, {true, false, true}, {true, true, true}};

  DatasetManifest m;
  for (SceneKind kind : kAllScenes) {
    DatasetManifest part = desk_manifest(kind, 31);
    part.entries.resize(2);
    for (auto& e : part.entries) e.id += "_" + std::string(scene_name(kind));
    m.entries.insert(m.entries.end(), part.entries.begin(), part.entries.end());
  }
  TrainConfig cfg;
  cfg.network.base_channels = 8;
  cfg.network.edfm_channels = {8, 16, 32};
  cfg.crop_size = 64;
  cfg.batch_size = 3;
  cfg.epochs = 60;
  cfg.lr = 1e-3;
  cfg.lr_drop_epochs = {45};
  cfg.seed = 3;

  const AblationReport mods = run_ablation(AblationKind::Modules, cfg, m);
  std::vector<R> got6;
  for (const auto& r : mods.rows) got6.push_back(r.toggles);
  TrainConfig lcfg = cfg;
  lcfg.epochs = 1;
  lcfg.lr_drop_epochs = {};
  const AblationReport losses = run_ablation(AblationKind::Losses, lcfg, m);
  std::vector<R> got7;
  for (const auto& r : losses.rows) got7.push_back(r.toggles);

  const double none = mods.rows.front().psnr_mean, full = mods.rows.back().psnr_mean;
  const bool ok = got6 == t6 && got7 == t7 && mods.split == "train" && full >= none;
  return {ok, fmt("modules rows %zu, losses rows %zu, train PSNR full %.3f vs none %.3f", got6.size(), got7.size(),
                  full, none)};
}

Outcome c10_lr_schedule() {
  const fs::path dir = scratch("lr");
  ManifestEntry e;
  e.id = "tiny";
  e.clean = dir / "tiny.png";
  e.scene = SceneKind::LowLight;
  save_image(oracle::random_image(4, 4, 3, 1), e.clean);
  DatasetManifest m;
  m.entries = {e};
  TrainConfig cfg;  // epochs 100, lr 1e-3, drops at 30/60/90
  cfg.crop_size = 4;
  cfg.batch_size = 1;
  cfg.network.base_channels = 1;
  cfg.network.edfm_channels = {1, 2, 3};
  const TrainResult tr = train(cfg, m, TrainOptions{dir, {}});
  bool ok = tr.log.size() == 100;
  for (const EpochLog& l : tr.log) {
    const double want = l.epoch < 30 ? 1e-3 : l.epoch < 60 ? 1e-4 : l.epoch < 90 ? 1e-5 : 1e-6;
    ok = ok && l.lr == want;
  }
  // The CSV must carry the same values.
  std::istringstream csv(slurp(dir / "train_log.csv"));
  std::string line;
  std::getline(csv, line);
  std::set<double> seen;
  int rows = 0;
  while (std::getline(csv, line)) {
    const auto c1 = line.find(',');
    const int epoch = std::stoi(line.substr(0, c1));
    const double lr = std::stod(line.substr(c1 + 1, line.find(',', c1 + 1) - c1 - 1));
    ok = ok && lr == lr_at_epoch(cfg, epoch);
    seen.insert(lr);
    ++rows;
  }
  ok = ok && rows == 100 && seen == std::set<double>{1e-6, 1e-5, 1e-4, 1e-3};
  fs::remove_all(dir);
  std::string lrs;
  for (double v : seen) lrs += fmt("%g ", v);
  return {ok, fmt("%zu epochs, distinct logged lr: %s", tr.log.size(), lrs.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"OLS oracle equivalence", c1_ols_oracle},
      {"gamma laws", c2_gamma_laws},
      {"loss identities", c3_loss_identities},
      {"gradient checks", c4_gradients},
      {"synthesis round trip", c5_synthesis},
      {"metric oracles", c6_metrics},
      {"overfit sanity", c7_overfit},
      {"training determinism", c8_determinism},
      {"ablation scaffolding", c9_ablation},
      {"lr schedule", c10_lr_schedule},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
