#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "net.hpp"
#include "oracles.hpp"
#include "checkpoint.hpp"

using namespace aosr;
namespace ag = aosr::ag;

namespace {

NetworkConfig small_config() {
  NetworkConfig cfg;
  cfg.base_channels = 4;
  cfg.edfm_channels = {4, 6, 8};
  return cfg;
}

ParamMap zero_params(const NetworkConfig& cfg) {
  ParamMap p;
  for (const auto& [name, shape] : parameter_manifest(cfg)) p.emplace(name, Tensor(shape));
  return p;
}

}  // namespace

TEST_CASE("convl shape, prelu and zero input") {
  NetworkConfig cfg = small_config();
  Checkpoint ck = init_weights(cfg, 1);
  Network net(cfg, ck.params, false);
  Tensor x = oracle::random_tensor({2, 4, 6, 5}, 3);
  ag::Var y = net.convl("edfm.down1", ag::constant(x));
  CHECK(y->value.shape() == Shape{2, 6, 6, 5});

  ParamMap p = zero_params(cfg);
  p["edfm.down1.norm.gain"].fill(1.0);
  Network zn(cfg, p, false);
  Tensor zero({1, 4, 4, 4});
  const Tensor zy = zn.convl("edfm.down1", ag::constant(zero))->value;
  for (double v : zy.values()) CHECK(v == 0.0);
}

TEST_CASE("srb with zero kernels reduces to prelu of the input") {
  NetworkConfig cfg = small_config();
  ParamMap p = zero_params(cfg);
  p["dem.srb.prelu"].fill(0.25);
  Network net(cfg, p, false);
  Tensor x = oracle::random_tensor({2, 4, 5, 5}, 4);
  Tensor y = net.srb("dem.srb", ag::constant(x))->value;
  CHECK(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == doctest::Approx(x[i] < 0 ? 0.25 * x[i] : x[i]));
}

TEST_CASE("branch output widths") {
  NetworkConfig cfg;
  Checkpoint ck = init_weights(cfg, 2);
  Network net(cfg, ck.params, false);
  ag::Var img = ag::constant(to_tensor(oracle::random_image(8, 8, 3, 5)));
  CHECK(net.dem(img)->value.shape() == Shape{1, 16, 8, 8});
  CHECK(net.crm(img)->value.shape() == Shape{1, 16, 8, 8});
  CHECK(net.mem(img)->value.shape() == Shape{1, 16, 8, 8});
  CHECK(ck.params.at("crm.fuse.weight").shape().c == 3 * 16);
  CHECK(ck.params.at("dem.fuse.weight").shape().c == 4 * 16);
  CHECK(ck.params.at("mem.fuse.weight").shape().c == 4 * 16);
}

TEST_CASE("dem branches agree on all-ones features") {
  NetworkConfig cfg = small_config();
  Checkpoint ck = init_weights(cfg, 3);
  Network net(cfg, ck.params, false);
  auto br = net.dem_branches(ag::constant(Tensor({1, 4, 3, 3}, 1.0)));
  REQUIRE(br.size() == 4);
  for (const auto& b : br) CHECK(b->value.values() == br[0]->value.values());
}

TEST_CASE("OLS thresholds flag constant planes") {
  Tensor f({1, 2, 4, 4});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      f.at(0, 0, y, x) = 0.5;
      f.at(0, 1, y, x) = (y * 4 + x) / 15.0;
    }
  OlsThresholds th = ols_plane_thresholds(f, OLSParams{0.0, 1.0, 0.0, 0.0});
  CHECK(th.passthrough[0] == 1);
  CHECK(th.passthrough[1] == 0);
  CHECK(th.lo[1] == 0.0);
  CHECK(th.hi[1] == 1.0);
  Tensor y = ag::stretch_planes(ag::constant(f), th.lo, th.hi, th.passthrough)->value;
  for (std::size_t i = 0; i < y.numel(); ++i) {
    CHECK(std::isfinite(y[i]));
    CHECK(y[i] == doctest::Approx(f[i]));
  }
}

TEST_CASE("EDFM spatial contract") {
  NetworkConfig cfg = small_config();
  Checkpoint ck = init_weights(cfg, 4);
  Network net(cfg, ck.params, false);
  ag::Var f64 = ag::constant(oracle::random_tensor({1, 4, 8, 8}, 5));
  CHECK(net.edfm(f64, f64, f64)->value.shape() == Shape{1, 3, 8, 8});
  ag::Var f63 = ag::constant(oracle::random_tensor({1, 4, 7, 8}, 5));
  CHECK_ERROR_CODE(net.edfm(f63, f63, f63), ErrorCode::IndivisibleSpatialDims);

  ParamMap zp = zero_params(cfg);
  Network zn(cfg, zp, false);
  const Tensor zout = zn.edfm(f64, f64, f64)->value;
  for (double v : zout.values()) CHECK(v == 0.0);
}

TEST_CASE("aosrnet_forward shape, range and determinism") {
  NetworkConfig cfg = small_config();
  Checkpoint ck = init_weights(cfg, 5);
  Image img = oracle::random_image(30, 22, 3, 6);
  Image a = aosrnet_forward(img, ck);
  Image b = aosrnet_forward(img, ck);
  CHECK(a.same_shape(img));
  CHECK(a.data == b.data);
  for (double v : a.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_ERROR_CODE(aosrnet_forward(Image(8, 8, 1), ck), ErrorCode::ShapeMismatch);
}

TEST_CASE("init_weights is seeded") {
  NetworkConfig cfg = small_config();
  Checkpoint a = init_weights(cfg, 7), b = init_weights(cfg, 7), c = init_weights(cfg, 8);
  CHECK(a.params.size() == parameter_manifest(cfg).size());
  bool differs = false;
  for (const auto& [name, t] : a.params) {
    CHECK(t.values() == b.params.at(name).values());
    differs = differs || t.values() != c.params.at(name).values();
  }
  CHECK(differs);
  CHECK(a.params.at("edfm.out.bias").values() == Tensor::Storage(3, 0.5));
}

TEST_CASE("disabled branches keep only the stem") {
  NetworkConfig cfg = small_config();
  cfg.use_dem = cfg.use_crm = cfg.use_mem = false;
  std::set<std::string> names;
  for (const auto& [n, s] : parameter_manifest(cfg)) names.insert(n);
  CHECK(names.count("dem.stem.weight"));
  CHECK(!names.count("dem.fuse.weight"));
  CHECK(!names.count("crm.srb.prelu"));
  CHECK(!names.count("mem.atrous0.weight"));
  Checkpoint ck = init_weights(cfg, 1);
  CHECK(aosrnet_forward(oracle::random_image(8, 8, 3, 2), ck).same_shape(Image(8, 8, 3)));
}

TEST_CASE("checkpoint validation and round trip") {
  TempDir dir("ckpt");
  NetworkConfig cfg = small_config();
  Checkpoint ck = init_weights(cfg, 9);
  ck.meta.epochs = 3;
  ck.meta.seed = 9;
  save_checkpoint(ck, dir / "c.aosr");
  Checkpoint back = load_checkpoint(dir / "c.aosr");
  CHECK(back.config == cfg);
  CHECK(back.meta == ck.meta);
  for (const auto& [name, t] : ck.params) CHECK(back.params.at(name).values() == t.values());

  Checkpoint broken = ck;
  broken.params.erase("edfm.out.bias");
  CHECK_ERROR_CODE(broken.validate(), ErrorCode::ConfigMismatch);
  broken = ck;
  broken.params["edfm.out.bias"] = Tensor({1, 4, 1, 1});
  CHECK_ERROR_CODE(broken.validate(), ErrorCode::ConfigMismatch);

  std::ofstream(dir / "junk.aosr") << "AOSRPACK but not really";
  CHECK_ERROR_CODE(load_checkpoint(dir / "junk.aosr"), ErrorCode::Format);
  CHECK_ERROR_CODE(load_checkpoint(dir / "missing.aosr"), ErrorCode::Io);
}

TEST_CASE("reflect padding and crop") {
  Image img = oracle::random_image(5, 6, 3, 3);
  Image p = pad_to_multiple(img, 4);
  CHECK(p.height == 8);
  CHECK(p.width == 8);
  CHECK(p.at(5, 0, 0) == img.at(3, 0, 0));
  CHECK(p.at(0, 6, 1) == img.at(0, 4, 1));
  CHECK(crop(p, 0, 0, 5, 6).data == img.data);
  CHECK_ERROR_CODE(crop(img, 2, 0, 5, 6), ErrorCode::ShapeMismatch);
}
