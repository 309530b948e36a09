#include <algorithm>
#include <cmath>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "metrics.hpp"
#include "oracles.hpp"

using namespace aosr;

TEST_CASE("psnr closed forms") {
  Image a = oracle::random_image(8, 8, 3, 1);
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK(std::fabs(psnr(Image(4, 4, 3, 0.0), Image(4, 4, 3, 1.0))) < 1e-9);
  CHECK(std::fabs(psnr(Image(4, 4, 3, 0.3), Image(4, 4, 3, 0.4)) - 20.0) < 1e-9);
  CHECK_ERROR_CODE(psnr(a, Image(8, 7, 3)), ErrorCode::ShapeMismatch);
}

TEST_CASE("ssim against the direct-window oracle") {
  Image a = oracle::random_image(24, 20, 3, 2);
  CHECK(ssim(a, a) == 1.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    Image x = oracle::random_image(24, 20, 3, 10 + s);
    Image y = x;
    Image noise = oracle::random_image(24, 20, 3, 20 + s, -0.2, 0.2);
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] = std::clamp(y.data[i] + noise.data[i], 0.0, 1.0);
    CHECK(std::fabs(ssim(x, y) - oracle::ssim(x, y)) < 1e-9);
  }
  CHECK_ERROR_CODE(ssim(Image(10, 30, 3), Image(10, 30, 3)), ErrorCode::TooSmall);
}

TEST_CASE("ssim of an inverted pattern is negative") {
  Image a(16, 16, 1);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) a.at(y, x, 0) = (x + y) % 2 ? 0.8 : 0.2;
  Image inv = a;
  for (double& v : inv.data) v = 1.0 - v;
  CHECK(ssim(a, inv) < 0.0);
}

TEST_CASE("niqe model loading") {
  CHECK_ERROR_CODE(NiqeModel::load("/nonexistent/model.txt"), ErrorCode::ModelMissing);
  TempDir dir("niqe");
  std::ofstream(dir / "bad.txt") << "something else\n";
  CHECK_ERROR_CODE(NiqeModel::load(dir / "bad.txt"), ErrorCode::Format);
  NiqeModel m = NiqeModel::load(repo_data("niqe_model.txt"));
  CHECK(m.mu.size() == 36);
  CHECK(m.cov.rows() == 36);
  CHECK(m.block_h == 96);
}

TEST_CASE("niqe determinism and blur sensitivity") {
  NiqeModel m = NiqeModel::load(repo_data("niqe_model.txt"));
  Image img = load_image(test_data("natural_192.png"));
  const double a = niqe(img, m);
  CHECK(std::isfinite(a));
  CHECK(niqe(img, m) == a);

  // Heavy box blur, applied twice.
  Image blurred = img;
  for (int pass = 0; pass < 2; ++pass) {
    Image src = blurred;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < img.channels; ++c) {
          double s = 0;
          int n = 0;
          for (int dy = -3; dy <= 3; ++dy)
            for (int dx = -3; dx <= 3; ++dx) {
              const int yy = y + dy, xx = x + dx;
              if (yy < 0 || xx < 0 || yy >= img.height || xx >= img.width) continue;
              s += src.at(yy, xx, c);
              ++n;
            }
          blurred.at(y, x, c) = s / n;
        }
  }
  CHECK(niqe(blurred, m) > a);
  CHECK_ERROR_CODE(niqe(oracle::random_image(64, 64, 3, 1), m), ErrorCode::TooSmall);
}

// Frozen from the widely used Python SSIM/PSNR port (valid-region Gaussian
// window, per-channel mean) on pairs of the 8-bit desk fixtures.
TEST_CASE("ssim and psnr match frozen reference scores") {
  const Image a = load_image(test_data("clean/astronaut.png")), b = load_image(test_data("clean/chelsea.png"));
  const Image c = load_image(test_data("clean/coffee.png")), d = load_image(test_data("clean/rocket.png"));
  CHECK(ssim(a, b) == doctest::Approx(0.06412061582963714).epsilon(1e-9));
  CHECK(psnr(a, b) == doctest::Approx(9.910125628013194).epsilon(1e-9));
  CHECK(ssim(c, d) == doctest::Approx(0.08072472268382166).epsilon(1e-9));
  CHECK(psnr(c, d) == doctest::Approx(8.172824227299083).epsilon(1e-9));
}

// Frozen from the widely used Python NIQE port, fed the same MATLAB-rgb2gray
// rounded luminance. That port resizes in float32, hence the tolerance.
TEST_CASE("niqe matches frozen reference scores") {
  NiqeModel m = NiqeModel::load(repo_data("niqe_model.txt"));
  CHECK(niqe(load_image(test_data("natural_192.png")), m) == doctest::Approx(3.0946403948699435).epsilon(1e-4));
  CHECK(niqe(load_image(test_data("natural_250x200.png")), m) == doctest::Approx(7.602252072674548).epsilon(1e-4));
}

TEST_CASE("matlab_imresize keeps constants and halves size") {
  Image c(10, 14, 1, 0.6);
  Image r = matlab_imresize(c, 0.5);
  CHECK(r.height == 5);
  CHECK(r.width == 7);
  for (double v : r.data) CHECK(v == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("mean_std and report formatting") {
  MeanStd s = mean_std({1.0, 2.0, 3.0, NAN});
  CHECK(s.mean == 2.0);
  CHECK(s.std == doctest::Approx(1.0));
  CHECK(mean_std({1.0, 3.0}, false).std == doctest::Approx(1.0));
  CHECK(format_mean_std(MeanStd{22.939, 4.575}) == "22.939±4.575");

  MetricReport rep;
  rep.dataset = "desk";
  rep.rows = {{"a.png", 30.0, 0.9, NAN}, {"b.png", 32.0, 0.8, NAN}};
  rep.recompute();
  CHECK(rep.psnr.mean == 31.0);
  const std::string csv = rep.to_csv();
  CHECK(csv.rfind("image,psnr,ssim,niqe\n", 0) == 0);
  CHECK(csv.find("#mean") != std::string::npos);
  CHECK(csv.find("nan") != std::string::npos);
  auto j = rep.to_json();
  CHECK(j["dataset"] == "desk");
  CHECK(j["rows"].size() == 2);
}

TEST_CASE("evaluate_split") {
  TempDir dir("eval");
  std::filesystem::create_directories(dir / "r");
  std::filesystem::create_directories(dir / "t");
  for (const char* n : {"x.png", "y.png"}) {
    Image img = oracle::random_image(16, 16, 3, n[0]);
    save_image(img, dir / "r" / n);
    save_image(img, dir / "t" / n);
  }
  MetricReport rep = evaluate_split(dir / "r", dir / "t", "same");
  REQUIRE(rep.rows.size() == 2);
  for (const auto& r : rep.rows) {
    CHECK(r.psnr == kPsnrCap);
    CHECK(r.ssim == 1.0);
    CHECK(std::isnan(r.niqe));
  }
  CHECK(rep.psnr.std == 0.0);

  save_image(Image(16, 16, 3), dir / "r" / "z.png");
  bool named = false;
  try {
    evaluate_split(dir / "r", dir / "t", "x");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PairMismatch);
    named = std::string(e.what()).find("z.png") != std::string::npos;
  }
  CHECK(named);
}
