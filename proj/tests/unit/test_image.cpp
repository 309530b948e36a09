#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "image.hpp"
#include "oracles.hpp"
#include "tensor.hpp"

using namespace aosr;

TEST_CASE("load_image normalizes 8-bit values") {
  TempDir dir("img_load");
  Image white(2, 2, 3, 1.0);
  save_image(white, dir / "white.png");
  Image back = load_image(dir / "white.png");
  CHECK(back.height == 2);
  CHECK(back.width == 2);
  CHECK(back.channels == 3);
  for (double v : back.data) CHECK(v == 1.0);

  Image mid(1, 1, 3, 128.0 / 255.0);
  save_image(mid, dir / "mid.png");
  CHECK(load_image(dir / "mid.png").data[0] == doctest::Approx(0.50196).epsilon(1e-5));
}

TEST_CASE("load_image on a missing file") {
  CHECK_ERROR_CODE(load_image("/nonexistent/nothing.png"), ErrorCode::Io);
}

TEST_CASE("load_image rejects non-PNG content") {
  TempDir dir("img_bad");
  std::ofstream(dir / "junk.png") << "not a png";
  CHECK_ERROR_CODE(load_image(dir / "junk.png"), ErrorCode::Format);
}

TEST_CASE("save_image clamps and rounds half up") {
  TempDir dir("img_save");
  Image img(1, 2, 3);
  for (int c = 0; c < 3; ++c) {
    img.at(0, 0, c) = 1.2;
    img.at(0, 1, c) = 0.5;
  }
  save_image(img, dir / "q.png");
  Image back = load_image(dir / "q.png");
  CHECK(back.at(0, 0, 0) == 1.0);
  CHECK(back.at(0, 1, 0) * 255.0 == doctest::Approx(128.0));
}

TEST_CASE("random image round trip stays within one quantization step") {
  TempDir dir("img_rt");
  Image img = oracle::random_image(17, 23, 3, 5);
  save_image(img, dir / "r.png");
  Image back = load_image(dir / "r.png");
  REQUIRE(back.same_shape(img));
  double worst = 0;
  for (std::size_t i = 0; i < img.size(); ++i) worst = std::max(worst, std::fabs(img.data[i] - back.data[i]));
  CHECK(worst < 1.0 / 255.0);
}

TEST_CASE("16-bit gray round trip") {
  TempDir dir("img_gray");
  Image d = oracle::random_image(8, 9, 1, 3);
  save_gray16(d, dir / "d.png");
  Image back = load_gray(dir / "d.png");
  REQUIRE(back.channels == 1);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(back.data[i] == doctest::Approx(d.data[i]).epsilon(1e-4));
}

TEST_CASE("percentile examples") {
  const std::vector<double> v{0.1, 0.5, 0.9};
  CHECK(percentile(v, 0.0) == 0.1);
  CHECK(percentile(v, 1.0) == 0.9);

  std::vector<double> ramp;
  for (int i = 0; i <= 100; ++i) ramp.push_back(i / 100.0);
  CHECK(percentile(ramp, 0.01) == doctest::Approx(0.01));

  CHECK_ERROR_CODE(percentile(std::vector<double>{}, 0.5), ErrorCode::EmptyInput);
}

TEST_CASE("percentile agrees with the counting oracle") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + gen() % 300);
    for (double& x : v) x = u(gen);
    const double p = u(gen);
    CHECK(percentile(v, p) == oracle::percentile(v, p));
  }
}

TEST_CASE("clamp01") {
  Image img(1, 3, 1);
  img.data = {-0.3, 0.4, 7.0};
  Image c = clamp01(img);
  CHECK(c.data[0] == 0.0);
  CHECK(c.data[1] == 0.4);
  CHECK(c.data[2] == 1.0);
}

TEST_CASE("image and tensor layouts agree") {
  Image img = oracle::random_image(5, 7, 3, 9);
  Tensor t = to_tensor(img);
  CHECK(t.shape() == Shape{1, 3, 5, 7});
  CHECK(t.at(0, 2, 4, 6) == img.at(4, 6, 2));
  Image back = to_image(t);
  CHECK(back.data == img.data);

  Tensor s = stack({img, clamp01(img)});
  CHECK(s.shape().n == 2);
  CHECK(to_image(s, 1).data == img.data);
}

TEST_CASE("list_png is sorted and ignores other files") {
  TempDir dir("img_list");
  save_image(Image(2, 2, 3), dir / "b.png");
  save_image(Image(2, 2, 3), dir / "a.png");
  std::ofstream(dir / "notes.txt") << "x";
  auto files = list_png(dir.path());
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "a.png");
  CHECK(files[1].filename() == "b.png");
}
