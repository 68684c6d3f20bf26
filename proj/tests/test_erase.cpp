#include <doctest.h>

#include <cmath>

#include "bbsteal/erase.hpp"
#include "helpers.hpp"

using namespace bbsteal;

TEST_CASE("uniform prior") {
  const PriorMap p = uniform_prior(2, 2);
  for (double w : p.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-12));
  const PriorMap q = uniform_prior(1, 1);
  CHECK(q.weights.size() == 1);
  CHECK(q.weights[0] == doctest::Approx(1.0));
  const PriorMap r = uniform_prior(7, 13);
  double sum = 0.0;
  for (double w : r.weights) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS(uniform_prior(0, 4));
}

TEST_CASE("attention prior: proportional, with uniform fallback") {
  AttentionMap att;
  att.image_h = 2;
  att.image_w = 2;
  att.upsampled = {1.0f, 1.0f, 1.0f, 1.0f};
  PriorMap p = attention_prior(att);
  for (double w : p.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-9));

  att.upsampled = {0.0f, 0.0f, 0.0f, 0.0f};
  p = attention_prior(att);
  for (double w : p.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-9));

  att.upsampled = {0.0f, 3.0f, 0.0f, 0.0f};
  p = attention_prior(att);
  CHECK(p.weights[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.weights[0] == 0.0);
}

TEST_CASE("erase: fixed geometry example on a 32x32 image") {
  // s_l = s_h = 0.25, r = 1 on 32x32: S_e = 256, H_e = W_e = 8, so a 16x16
  // rectangle when the center is far from the borders
  Rng rng(3);
  ImageTensor img = testing::random_image(3, 32, 32, rng);
  EraseParams params;
  params.area_lo = 0.25;
  params.area_hi = 0.25;
  params.aspect_lo = 1.0;
  params.aspect_hi = 1.0;
  PriorMap delta = uniform_prior(32, 32);
  for (auto& w : delta.weights) w = 0.0;
  delta.weights[16 * 32 + 16] = 1.0;  // center (16,16)

  auto [erased, rect] = erase(img, delta, params, rng);
  CHECK(rect.center_x == 16);
  CHECK(rect.center_y == 16);
  CHECK(rect.half_w == doctest::Approx(8.0).epsilon(1e-6));
  CHECK(rect.half_h == doctest::Approx(8.0).epsilon(1e-6));
  CHECK(rect.x1 - rect.x0 == 16);
  CHECK(rect.y1 - rect.y0 == 16);
  CHECK(rect.area_ratio == doctest::Approx(0.25).epsilon(1e-6));

  // unerased pixels bit-identical, erased pixels in [0,1]
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        const bool inside = x >= rect.x0 && x < rect.x1 && y >= rect.y0 && y < rect.y1;
        if (!inside) {
          CHECK(erased.data.at(c, y, x) == img.data.at(c, y, x));
        } else {
          CHECK(erased.data.at(c, y, x) >= 0.0f);
          CHECK(erased.data.at(c, y, x) <= 1.0f);
        }
      }
    }
  }
  CHECK(erased.id != img.id);
}

TEST_CASE("erase: delta prior pins the center") {
  Rng rng(4);
  ImageTensor img = testing::random_image(1, 16, 16, rng);
  PriorMap delta = uniform_prior(16, 16);
  for (auto& w : delta.weights) w = 0.0;
  delta.weights[5 * 16 + 5] = 1.0;
  EraseParams params;
  for (int t = 0; t < 50; ++t) {
    auto [erased, rect] = erase(img, delta, params, rng);
    CHECK(rect.center_x == 5);
    CHECK(rect.center_y == 5);
  }
}

TEST_CASE("erase: sampled geometry always within the configured ranges") {
  Rng rng(6);
  ImageTensor img = testing::random_image(3, 16, 16, rng);
  const PriorMap uniform = uniform_prior(16, 16);
  EraseParams params;  // defaults 0.02..0.4, 0.3..1/0.3
  for (int t = 0; t < 2000; ++t) {
    auto [erased, rect] = erase(img, uniform, params, rng);
    CHECK(rect.area_ratio >= params.area_lo);
    CHECK(rect.area_ratio <= params.area_hi);
    CHECK(rect.aspect >= params.aspect_lo);
    CHECK(rect.aspect <= params.aspect_hi);
    // pre-clip area and aspect ratio reproduce the sampled values
    const double area = 4.0 * rect.half_w * rect.half_h;
    CHECK(area == doctest::Approx(rect.area_ratio * 256.0).epsilon(1e-6));
    CHECK(rect.half_h / rect.half_w == doctest::Approx(rect.aspect).epsilon(1e-6));
    // clipped bounds inside the image and non-empty
    CHECK(rect.x0 >= 0);
    CHECK(rect.y0 >= 0);
    CHECK(rect.x1 <= 16);
    CHECK(rect.y1 <= 16);
    CHECK(rect.x1 > rect.x0);
    CHECK(rect.y1 > rect.y0);
    for (float v : erased.data.v) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("erase: uniform-prior centers pass a chi-square test at 0.01") {
  Rng rng(7);
  ImageTensor img = testing::random_image(1, 16, 16, rng);
  const PriorMap uniform = uniform_prior(16, 16);
  EraseParams params;
  std::vector<int> counts(256, 0);
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    auto [erased, rect] = erase(img, uniform, params, rng);
    counts[rect.center_y * 16 + rect.center_x]++;
  }
  const double expected = static_cast<double>(draws) / 256.0;
  double stat = 0.0;
  for (int c : counts) {
    const double d = c - expected;
    stat += d * d / expected;
  }
  // chi-square 0.99 quantile, df = 255, Wilson-Hilferty approximation
  const int df = 255;
  const double z = 2.326347874;
  const double crit = df * std::pow(1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df)), 3);
  CHECK(stat < crit);
}

TEST_CASE("erase: pure function of (image, prior, params, rng state)") {
  Rng rng_a(123), rng_b(123);
  Rng img_rng(9);
  ImageTensor img = testing::random_image(3, 16, 16, img_rng);
  const PriorMap uniform = uniform_prior(16, 16);
  EraseParams params;
  auto [e1, r1] = erase(img, uniform, params, rng_a);
  auto [e2, r2] = erase(img, uniform, params, rng_b);
  CHECK(e1.data.v == e2.data.v);
  CHECK(e1.id == e2.id);
  CHECK(r1.x0 == r2.x0);
}

TEST_CASE("erase parameter validation") {
  EraseParams bad;
  bad.area_lo = 0.5;
  bad.area_hi = 0.4;
  CHECK_THROWS(bad.validate());
  bad = EraseParams{};
  bad.aspect_lo = -1.0;
  CHECK_THROWS(bad.validate());
  EraseParams ok;
  CHECK_NOTHROW(ok.validate());
}
