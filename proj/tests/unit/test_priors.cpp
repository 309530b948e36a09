#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "priors.hpp"

using namespace aosr;

TEST_CASE("gamma_correct examples") {
  Image one(1, 1, 3, 1.0);
  for (double g : {0.25, 0.5, 2.0, 4.0, 7.3}) CHECK(gamma_correct(one, g).data[0] == 1.0);
  Image q(1, 1, 1, 0.25);
  CHECK(gamma_correct(q, 0.5).data[0] == doctest::Approx(0.5).epsilon(1e-15));
  Image h(1, 1, 1, 0.5);
  CHECK(gamma_correct(h, 4.0).data[0] == 0.0625);
  Image neg(1, 1, 1, -0.1);
  CHECK_ERROR_CODE(gamma_correct(neg, 2.0), ErrorCode::Domain);
}

TEST_CASE("gamma composition and fixed points") {
  Image img = oracle::random_image(16, 16, 3, 21);
  Image a = gamma_correct(gamma_correct(img, 0.5), 4.0);
  Image b = gamma_correct(img, 2.0);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::fabs(a.data[i] - b.data[i]) < 1e-9);
  Image zero(2, 2, 3, 0.0);
  CHECK(gamma_correct(zero, 0.25).data == zero.data);
}

TEST_CASE("gamma bank") {
  GammaBank bank;
  Image ones(4, 4, 3, 1.0);
  auto out = gamma_bank_apply(ones, bank);
  REQUIRE(out.size() == 4);
  for (const Image& o : out) CHECK(o.data == ones.data);

  GammaBank bad;
  bad.gammas = {};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.gammas = {1.0, -2.0};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("linear_stretch examples") {
  Image img(1, 3, 1);
  img.data = {0.2, 0.45, 0.7};
  CHECK(linear_stretch(img).data[1] == doctest::Approx(0.5));

  Image full(1, 3, 1);
  full.data = {0.0, 0.3, 1.0};
  CHECK(linear_stretch(full).data == full.data);

  Image flat(2, 2, 1, 0.4);
  CHECK_ERROR_CODE(linear_stretch(flat), ErrorCode::DegenerateRange);
}

TEST_CASE("OLS threshold expansion") {
  OLSParams p{0.01, 0.99, 0.1, 0.1};
  StretchBounds b = expand_bounds(0.2, 0.8, p);
  CHECK(b.lo == doctest::Approx(0.14));
  CHECK(b.hi == doctest::Approx(0.86));
}

TEST_CASE("OLS without adjustment on a full-range channel equals linear stretch") {
  std::vector<double> ramp;
  for (int i = 0; i <= 100; ++i) ramp.push_back(i / 100.0);
  Image img(1, 101, 1);
  img.data = ramp;
  // p = 0 and 1 pick the channel extremes.
  Image ols = optimized_linear_stretch(img, OLSParams{0.0, 1.0, 0.0, 0.0});
  Image ls = clamp01(linear_stretch(img));
  for (std::size_t i = 0; i < ls.size(); ++i) CHECK(ols.data[i] == doctest::Approx(ls.data[i]).epsilon(1e-12));

  // Saturated tails put the 1% and 99% percentiles at 0 and 1.
  Image sat(1, 100, 1);
  for (int i = 0; i < 100; ++i) sat.data[i] = i < 5 ? 0.0 : (i >= 95 ? 1.0 : (i - 5) / 90.0);
  Image a = optimized_linear_stretch(sat, OLSParams{});
  Image b = clamp01(linear_stretch(sat));
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-12));
}

TEST_CASE("OLS matches the brute-force oracle") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    Image img = oracle::random_image(64, 64, 3, 100 + trial);
    OLSParams p{0.01, 0.99, 0.05, 0.05};
    if (trial > 0) p = OLSParams{u(gen) * 0.1, 0.9 + u(gen) * 0.1, u(gen) * 0.3, u(gen) * 0.3};
    Image got = optimized_linear_stretch(img, p);
    Image want = oracle::ols(img, p);
    double worst = 0;
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::fabs(got.data[i] - want.data[i]));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("OLS parameter validation") {
  Image img = oracle::random_image(8, 8, 3, 1);
  CHECK_THROWS_AS(optimized_linear_stretch(img, OLSParams{0.6, 0.4, 0, 0}), Error);
  CHECK_THROWS_AS(optimized_linear_stretch(img, OLSParams{0.01, 0.99, -0.1, 0}), Error);
  Image flat(8, 8, 3, 0.3);
  CHECK_ERROR_CODE(optimized_linear_stretch(flat, OLSParams{}), ErrorCode::DegenerateRange);
}

TEST_CASE("local_contrast") {
  Image flat(6, 6, 1, 0.7);
  for (double v : local_contrast(flat, 5).data) CHECK(v == 0.0);

  Image img = oracle::random_image(6, 6, 3, 2);
  for (double v : local_contrast(img, 1).data) CHECK(v == 0.0);

  Image board(6, 6, 1);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) board.at(y, x, 0) = (x + y) % 2;
  for (double v : local_contrast(board, 3).data) CHECK(v == 1.0);

  CHECK_ERROR_CODE(local_contrast(img, 4), ErrorCode::BadWindow);
}
