#include "losses.hpp"

#include <cmath>

#include "checkpoint.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace aosr {

using nlohmann::json;

void LossWeights::validate() const {
  if (!(l1 >= 0.0 && color >= 0.0 && cr >= 0.0))
    fail(ErrorCode::InvalidArgument, "loss weights must be non-negative");
}

namespace {

using Kind = FeatureExtractor::Layer::Kind;

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::Conv: return "conv";
    case Kind::Relu: return "relu";
    case Kind::MaxPool: return "maxpool";
  }
  return "?";
}

Kind parse_kind(const std::string& s) {
  if (s == "conv") return Kind::Conv;
  if (s == "relu") return Kind::Relu;
  if (s == "maxpool") return Kind::MaxPool;
  fail(ErrorCode::Format, "unknown extractor layer type " + s);
}

}  // namespace

FeatureExtractor FeatureExtractor::surrogate(std::uint64_t seed) {
  FeatureExtractor fx;
  const int widths[] = {3, 6, 6, 8, 8, 8};
  for (int i = 0; i < 5; ++i) {
    const std::string id = std::to_string(i + 1);
    fx.layers_.push_back({Kind::Conv, "conv" + id, widths[i], widths[i + 1]});
    fx.layers_.push_back({Kind::Relu, "relu" + id});
    fx.tap_names_.push_back("relu" + id);
  }
  fx.randomize(seed, std::sqrt(6.0));
  return fx;
}

FeatureExtractor FeatureExtractor::vgg19(std::uint64_t seed) {
  FeatureExtractor fx;
  const int blocks[5][2] = {{2, 64}, {2, 128}, {4, 256}, {4, 512}, {4, 512}};
  int in = 3;
  for (int b = 0; b < 5; ++b) {
    const auto [reps, width] = blocks[b];
    for (int r = 0; r < reps; ++r) {
      const std::string id = std::to_string(b + 1) + "_" + std::to_string(r + 1);
      fx.layers_.push_back({Kind::Conv, "conv" + id, in, width});
      fx.layers_.push_back({Kind::Relu, "relu" + id});
      in = width;
    }
    fx.tap_names_.push_back(fx.layers_.back().name);
    fx.layers_.push_back({Kind::MaxPool, "pool" + std::to_string(b + 1)});
  }
  fx.randomize(seed, std::sqrt(6.0));
  return fx;
}

void FeatureExtractor::randomize(std::uint64_t seed, double gain) {
  weights_.clear();
  std::uint64_t idx = 0;
  for (const Layer& l : layers_) {
    if (l.kind != Kind::Conv) continue;
    Rng rng(derive_seed(seed, {idx++}));
    const double bound = gain / std::sqrt(9.0 * l.in);
    Tensor w(Shape{l.out, l.in, 3, 3});
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
    Tensor b(Shape{1, l.out, 1, 1});
    for (double& v : b.values()) v = rng.uniform(-0.1, 0.1);
    weights_.emplace(l.name + ".weight", std::move(w));
    weights_.emplace(l.name + ".bias", std::move(b));
  }
}

void FeatureExtractor::save(const std::filesystem::path& path) const {
  json layers = json::array();
  for (const Layer& l : layers_) {
    json e = {{"type", kind_name(l.kind)}, {"name", l.name}};
    if (l.kind == Kind::Conv) {
      e["in"] = l.in;
      e["out"] = l.out;
    }
    layers.push_back(std::move(e));
  }
  Container c;
  c.meta = {{"kind", "extractor"},
            {"layers", layers},
            {"taps", tap_names_},
            {"mean", mean_},
            {"std", std_}};
  c.tensors = weights_;
  write_container(c, path);
}

FeatureExtractor FeatureExtractor::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    fail(ErrorCode::Io, "extractor weights not found: " + path.string());
  Container c = read_container(path);
  if (c.meta.value("kind", "") != "extractor")
    fail(ErrorCode::Format, path.string() + " is not an extractor container");
  FeatureExtractor fx;
  try {
    for (const auto& e : c.meta.at("layers")) {
      Layer l{parse_kind(e.at("type").get<std::string>()), e.at("name").get<std::string>()};
      if (l.kind == Kind::Conv) {
        l.in = e.at("in").get<int>();
        l.out = e.at("out").get<int>();
        const auto& w = c.tensors.at(l.name + ".weight");
        if (!(w.shape() == Shape{l.out, l.in, 3, 3}))
          fail(ErrorCode::ConfigMismatch, "extractor layer " + l.name + " has wrong kernel shape");
        if (c.tensors.at(l.name + ".bias").numel() != static_cast<std::size_t>(l.out))
          fail(ErrorCode::ConfigMismatch, "extractor layer " + l.name + " has wrong bias size");
      }
      fx.layers_.push_back(std::move(l));
    }
    fx.tap_names_ = c.meta.at("taps").get<std::vector<std::string>>();
    if (c.meta.contains("mean")) fx.mean_ = c.meta.at("mean").get<std::array<double, 3>>();
    if (c.meta.contains("std")) fx.std_ = c.meta.at("std").get<std::array<double, 3>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("bad extractor description: ") + e.what());
  } catch (const std::out_of_range&) {
    fail(ErrorCode::ConfigMismatch, "extractor weights missing for a conv layer");
  }
  if (fx.tap_names_.size() != 5)
    fail(ErrorCode::ConfigMismatch, "extractor must expose exactly 5 taps");
  fx.weights_ = std::move(c.tensors);
  return fx;
}

std::vector<ag::Var> FeatureExtractor::taps(const ag::Var& img) const {
  std::vector<double> scale(3), shift(3);
  for (int c = 0; c < 3; ++c) {
    scale[c] = 1.0 / std_[c];
    shift[c] = -mean_[c] / std_[c];
  }
  ag::Var x = ag::channel_affine(img, scale, shift);
  std::vector<ag::Var> out;
  std::size_t next_tap = 0;
  for (const Layer& l : layers_) {
    switch (l.kind) {
      case Kind::Conv:
        x = ag::conv2d(x, ag::constant(weights_.at(l.name + ".weight")),
                       ag::constant(weights_.at(l.name + ".bias")));
        break;
      case Kind::Relu: x = ag::relu(x); break;
      case Kind::MaxPool: x = ag::max_pool2(x); break;
    }
    if (next_tap < tap_names_.size() && l.name == tap_names_[next_tap]) {
      out.push_back(x);
      ++next_tap;
    }
    if (next_tap == tap_names_.size()) break;
  }
  if (out.size() != tap_names_.size())
    fail(ErrorCode::ConfigMismatch, "extractor tap names do not match its layers");
  return out;
}

std::vector<Tensor> FeatureExtractor::taps(const Tensor& img) const {
  std::vector<Tensor> out;
  for (const ag::Var& v : taps(ag::constant(img))) out.push_back(std::move(v->value));
  return out;
}

double combine_losses(double l1, double color, double cr, const LossWeights& w) {
  return w.l1 * l1 + w.color * color + w.cr * cr;
}

ag::Var l1_loss(const ag::Var& restored, const Tensor& truth) {
  return ag::mean_abs_diff(restored, truth);
}

ag::Var color_loss(const ag::Var& restored, const Tensor& truth) {
  return ag::cosine_distance(restored, truth);
}

ag::Var cr_loss(const ag::Var& restored, const Tensor& degraded, const Tensor& truth,
                const FeatureExtractor& extractor, const FeatureTapWeights& omegas) {
  if (!(restored->value.shape() == truth.shape()) || !(degraded.shape() == truth.shape()))
    fail(ErrorCode::ShapeMismatch, "contrastive loss inputs must share one shape");
  const auto r = extractor.taps(restored);
  const auto d = extractor.taps(degraded);
  const auto g = extractor.taps(truth);
  std::vector<ag::Var> ratios;
  for (std::size_t i = 0; i < r.size(); ++i) {
    double denom = 0.0;
    for (std::size_t k = 0; k < g[i].numel(); ++k) denom += std::abs(d[i][k] - g[i][k]);
    denom /= static_cast<double>(g[i].numel());
    if (denom < 1e-12)
      fail(ErrorCode::DegenerateAnchor,
           "degraded and ground-truth features coincide at tap " + extractor.tap_names()[i]);
    ratios.push_back(ag::scale(ag::mean_abs_diff(r[i], g[i]), 1.0 / denom));
  }
  return ag::weighted_sum(ratios, omegas.omegas);
}

ag::Var total_loss(const ag::Var& restored, const Tensor& degraded, const Tensor& truth,
                   const LossWeights& weights, const FeatureExtractor& extractor,
                   LossBreakdown* breakdown) {
  weights.validate();
  const ag::Var terms[] = {l1_loss(restored, truth), color_loss(restored, truth),
                           cr_loss(restored, degraded, truth, extractor)};
  const double w[] = {weights.l1, weights.color, weights.cr};
  ag::Var total = ag::weighted_sum(terms, w);
  if (breakdown)
    *breakdown = {total->value[0], terms[0]->value[0], terms[1]->value[0], terms[2]->value[0]};
  return total;
}

double l1_loss(const Image& restored, const Image& truth) {
  if (!restored.same_shape(truth)) fail(ErrorCode::ShapeMismatch, "l1_loss: shape mismatch");
  return l1_loss(ag::constant(to_tensor(restored)), to_tensor(truth))->value[0];
}

double color_loss(const Image& restored, const Image& truth) {
  if (!restored.same_shape(truth)) fail(ErrorCode::ShapeMismatch, "color_loss: shape mismatch");
  return color_loss(ag::constant(to_tensor(restored)), to_tensor(truth))->value[0];
}

double cr_loss(const Image& restored, const Image& degraded, const Image& truth,
               const FeatureExtractor& extractor, const FeatureTapWeights& omegas) {
  if (!restored.same_shape(truth) || !degraded.same_shape(truth))
    fail(ErrorCode::ShapeMismatch, "cr_loss: shape mismatch");
  return cr_loss(ag::constant(to_tensor(restored)), to_tensor(degraded), to_tensor(truth),
                 extractor, omegas)
      ->value[0];
}

}  // namespace aosr
