#include "net.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace aosr {

void NetworkConfig::validate() const {
  if (base_channels < 1) fail(ErrorCode::InvalidArgument, "base_channels must be positive");
  gamma_bank.validate();
  if (gamma_bank.gammas.size() != 4)
    fail(ErrorCode::InvalidArgument, "gamma bank must hold exactly 4 exponents");
  for (const auto& t : ols_triples) t.validate();
  for (std::size_t i = 0; i < atrous_rates.size(); ++i) {
    if (atrous_rates[i] < 1) fail(ErrorCode::InvalidArgument, "atrous rates must be positive");
    if (i && atrous_rates[i] <= atrous_rates[i - 1])
      fail(ErrorCode::InvalidArgument, "atrous rates must be strictly increasing");
  }
  for (std::size_t i = 0; i < edfm_channels.size(); ++i) {
    if (edfm_channels[i] < 1) fail(ErrorCode::InvalidArgument, "EDFM widths must be positive");
    if (i && edfm_channels[i] <= edfm_channels[i - 1])
      fail(ErrorCode::InvalidArgument, "EDFM widths must be strictly increasing");
  }
}

namespace {

using Manifest = std::vector<std::pair<std::string, Shape>>;

void add_conv(Manifest& m, const std::string& p, int cin, int cout, int k) {
  m.emplace_back(p + ".weight", Shape{cout, cin, k, k});
  m.emplace_back(p + ".bias", Shape{1, cout, 1, 1});
}

void add_norm(Manifest& m, const std::string& p, int c) {
  m.emplace_back(p + ".gain", Shape{1, c, 1, 1});
  m.emplace_back(p + ".bias", Shape{1, c, 1, 1});
}

void add_convl(Manifest& m, const std::string& p, int cin, int cout) {
  add_conv(m, p + ".conv", cin, cout, 3);
  add_norm(m, p + ".norm", cout);
  m.emplace_back(p + ".prelu", Shape{1, 1, 1, 1});
}

void add_srb(Manifest& m, const std::string& p, int c) {
  add_convl(m, p + ".c1", c, c);
  add_convl(m, p + ".c2", c, c);
  add_conv(m, p + ".c3.conv", c, c, 3);
  add_norm(m, p + ".c3.norm", c);
  m.emplace_back(p + ".prelu", Shape{1, 1, 1, 1});
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Manifest parameter_manifest(const NetworkConfig& cfg) {
  cfg.validate();
  const int b = cfg.base_channels;
  const auto [c0, c1, c2] = cfg.edfm_channels;
  Manifest m;

  add_conv(m, "dem.stem", 3, b, 3);
  if (cfg.use_dem) {
    add_conv(m, "dem.fuse", static_cast<int>(cfg.gamma_bank.gammas.size()) * b, b, 1);
    add_srb(m, "dem.srb", b);
  }
  add_conv(m, "crm.stem", 3, b, 3);
  if (cfg.use_crm) {
    add_conv(m, "crm.fuse", static_cast<int>(cfg.ols_triples.size()) * b, b, 1);
    add_srb(m, "crm.srb", b);
  }
  add_conv(m, "mem.stem", 3, b, 3);
  if (cfg.use_mem) {
    for (std::size_t i = 0; i < cfg.atrous_rates.size(); ++i)
      add_conv(m, "mem.atrous" + std::to_string(i), b, b, 3);
    add_conv(m, "mem.fuse", static_cast<int>(cfg.atrous_rates.size()) * b, b, 1);
    add_srb(m, "mem.srb", b);
  }

  add_conv(m, "edfm.fuse", 2 * b, c0, 1);
  add_srb(m, "edfm.enc1", c0);
  add_convl(m, "edfm.down1", c0, c1);
  add_srb(m, "edfm.enc2", c1);
  add_convl(m, "edfm.down2", c1, c2);
  add_srb(m, "edfm.enc3", c2);
  add_convl(m, "edfm.up2", c2, c1);
  add_srb(m, "edfm.dec2", c1);
  add_convl(m, "edfm.up1", c1, c0);
  add_srb(m, "edfm.dec1", c0);
  add_conv(m, "edfm.out", c0, 3, 3);
  return m;
}

void Checkpoint::validate() const {
  const auto manifest = parameter_manifest(config);
  if (manifest.size() != params.size())
    fail(ErrorCode::ConfigMismatch,
         "checkpoint holds " + std::to_string(params.size()) + " arrays, config expects " +
             std::to_string(manifest.size()));
  for (const auto& [name, shape] : manifest) {
    auto it = params.find(name);
    if (it == params.end()) fail(ErrorCode::ConfigMismatch, "checkpoint lacks parameter " + name);
    if (!(it->second.shape() == shape))
      fail(ErrorCode::ConfigMismatch, "parameter " + name + " has shape " +
                                          it->second.shape().str() + ", config expects " +
                                          shape.str());
  }
}

Checkpoint init_weights(const NetworkConfig& config, std::uint64_t seed) {
  Checkpoint ck;
  ck.config = config;
  ck.meta.seed = seed;
  const auto manifest = parameter_manifest(config);
  // Conv weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), keyed by
  // the owning conv's fan-in.
  std::map<std::string, int> fan_in;
  for (const auto& [name, shape] : manifest)
    if (ends_with(name, ".weight"))
      fan_in[name.substr(0, name.size() - 7)] = shape.c * shape.h * shape.w;

  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& [name, shape] = manifest[i];
    Tensor t(shape);
    if (ends_with(name, ".prelu")) {
      t.fill(config.prelu_init);
    } else if (ends_with(name, ".gain")) {
      t.fill(1.0);
    } else if (ends_with(name, "norm.bias")) {
      t.fill(0.0);
    } else {
      const std::string owner = name.substr(0, name.rfind('.'));
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in.at(owner)));
      Rng rng(derive_seed(seed, {i}));
      for (double& v : t.values()) v = rng.uniform(-bound, bound);
      // Start the restored image near mid-gray, well inside the output clamp,
      // so every pixel passes gradient from the first step.
      if (name == "edfm.out.bias") t.fill(0.5);
      if (name == "edfm.out.weight")
        for (double& v : t.values()) v *= 0.1;
    }
    ck.params.emplace(name, std::move(t));
  }
  return ck;
}

OlsThresholds ols_plane_thresholds(const Tensor& features, const OLSParams& params) {
  const Shape& s = features.shape();
  const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
  const std::size_t hw = s.plane();
  OlsThresholds th;
  th.lo.resize(planes);
  th.hi.resize(planes);
  th.passthrough.resize(planes);
  for (std::size_t pl = 0; pl < planes; ++pl) {
    std::span<const double> plane(features.data() + pl * hw, hw);
    try {
      const StretchBounds b = ols_bounds(plane, params);
      th.lo[pl] = b.lo;
      th.hi[pl] = b.hi;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateRange) throw;
      th.lo[pl] = 0.0;
      th.hi[pl] = 1.0;
      th.passthrough[pl] = 1;
    }
  }
  return th;
}

Network::Network(const NetworkConfig& config, const ParamMap& params, bool trainable)
    : config_(config), params_(params), trainable_(trainable) {}

ag::Var Network::param(const std::string& name) {
  if (auto it = bound_.find(name); it != bound_.end()) return it->second;
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorCode::ConfigMismatch, "missing parameter " + name);
  ag::Var v = trainable_ ? ag::parameter(it->second) : ag::constant(it->second);
  bound_.emplace(name, v);
  return v;
}

ag::Var Network::conv(const std::string& prefix, const ag::Var& x, int dilation) {
  return ag::conv2d(x, param(prefix + ".weight"), param(prefix + ".bias"), dilation);
}

ag::Var Network::convl(const std::string& prefix, const ag::Var& x) {
  ag::Var y = conv(prefix + ".conv", x);
  y = ag::layer_norm(y, param(prefix + ".norm.gain"), param(prefix + ".norm.bias"));
  return ag::prelu(y, param(prefix + ".prelu"));
}

ag::Var Network::srb(const std::string& prefix, const ag::Var& x) {
  ag::Var y = convl(prefix + ".c1", x);
  y = convl(prefix + ".c2", y);
  y = conv(prefix + ".c3.conv", y);
  y = ag::layer_norm(y, param(prefix + ".c3.norm.gain"), param(prefix + ".c3.norm.bias"));
  if (!(y->value.shape() == x->value.shape()))
    fail(ErrorCode::ShapeMismatch, "SRB residual: " + y->value.shape().str() + " vs " +
                                       x->value.shape().str());
  return ag::prelu(ag::add(y, x), param(prefix + ".prelu"));
}

std::vector<ag::Var> Network::dem_branches(const ag::Var& stem_out) const {
  std::vector<ag::Var> out;
  for (double g : config_.gamma_bank.gammas)
    out.push_back(ag::signed_pow(stem_out, g, config_.gamma_bank.epsilon));
  return out;
}

ag::Var Network::dem(const ag::Var& img) {
  ag::Var s = conv("dem.stem", img);
  if (!config_.use_dem) return s;
  const auto branches = dem_branches(s);
  return srb("dem.srb", conv("dem.fuse", ag::concat_channels(branches)));
}

ag::Var Network::crm(const ag::Var& img) {
  ag::Var s = conv("crm.stem", img);
  if (!config_.use_crm) return s;
  if (ols_cache_ && !ols_cache_->replay) ols_cache_->entries.clear();
  std::vector<ag::Var> branches;
  for (std::size_t i = 0; i < config_.ols_triples.size(); ++i) {
    OlsThresholds th;
    if (ols_cache_ && ols_cache_->replay) {
      th = ols_cache_->entries.at(i);
    } else {
      th = ols_plane_thresholds(s->value, config_.ols_triples[i]);
      if (ols_cache_) ols_cache_->entries.push_back(th);
    }
    branches.push_back(ag::stretch_planes(s, std::move(th.lo), std::move(th.hi),
                                          std::move(th.passthrough)));
  }
  return srb("crm.srb", conv("crm.fuse", ag::concat_channels(branches)));
}

ag::Var Network::mem(const ag::Var& img) {
  ag::Var s = conv("mem.stem", img);
  if (!config_.use_mem) return s;
  std::vector<ag::Var> branches;
  for (std::size_t i = 0; i < config_.atrous_rates.size(); ++i)
    branches.push_back(conv("mem.atrous" + std::to_string(i), s, config_.atrous_rates[i]));
  return srb("mem.srb", conv("mem.fuse", ag::concat_channels(branches)));
}

ag::Var Network::edfm(const ag::Var& dem, const ag::Var& crm, const ag::Var& mem) {
  const Shape s = dem->value.shape();
  if (!(crm->value.shape() == s) || !(mem->value.shape() == s))
    fail(ErrorCode::ShapeMismatch, "EDFM inputs must share one shape");
  if (s.h % 4 || s.w % 4)
    fail(ErrorCode::IndivisibleSpatialDims,
         "EDFM needs H and W divisible by 4, got " + std::to_string(s.h) + "x" + std::to_string(s.w));

  const ag::Var parts[] = {ag::add(dem, crm), mem};
  ag::Var e1 = srb("edfm.enc1", conv("edfm.fuse", ag::concat_channels(parts)));
  ag::Var e2 = srb("edfm.enc2", convl("edfm.down1", ag::max_pool2(e1)));
  ag::Var e3 = srb("edfm.enc3", convl("edfm.down2", ag::max_pool2(e2)));
  ag::Var d2 = srb("edfm.dec2", ag::add(convl("edfm.up2", ag::upsample2(e3)), e2));
  ag::Var d1 = srb("edfm.dec1", ag::add(convl("edfm.up1", ag::upsample2(d2)), e1));
  return ag::clamp01(conv("edfm.out", d1));
}

ag::Var Network::forward(const ag::Var& img) {
  if (img->value.shape().c != 3) fail(ErrorCode::ShapeMismatch, "network input must be RGB");
  ag::Var d = dem(img);
  ag::Var c = crm(img);
  ag::Var m = mem(img);
  return edfm(d, c, m);
}

namespace {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Image pad_to_multiple(const Image& img, int multiple) {
  const int h = (img.height + multiple - 1) / multiple * multiple;
  const int w = (img.width + multiple - 1) / multiple * multiple;
  if (h == img.height && w == img.width) return img;
  Image out(h, w, img.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(reflect_index(y, img.height), reflect_index(x, img.width), c);
  return out;
}

Image crop(const Image& img, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || y0 + h > img.height || x0 + w > img.width)
    fail(ErrorCode::ShapeMismatch, "crop window outside the image");
  Image out(h, w, img.channels);
  for (int y = 0; y < h; ++y)
    std::copy_n(&img.data[((static_cast<std::size_t>(y0) + y) * img.width + x0) * img.channels],
                static_cast<std::size_t>(w) * img.channels, &out.data[static_cast<std::size_t>(y) * w * img.channels]);
  return out;
}

Image aosrnet_forward(const Image& img, const Checkpoint& ckpt) {
  ckpt.validate();
  if (img.channels != 3) fail(ErrorCode::ShapeMismatch, "restoration input must be RGB");
  const Image padded = pad_to_multiple(img, 4);
  Network net(ckpt.config, ckpt.params, false);
  ag::Var out = net.forward(ag::constant(to_tensor(padded)));
  return clamp01(crop(to_image(out->value), 0, 0, img.height, img.width));
}

}  // namespace aosr
