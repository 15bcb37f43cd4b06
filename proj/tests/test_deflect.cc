#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "pixdef/deflect.h"
#include "pixdef/error.h"
#include "test_util.h"

using namespace pixdef;
using namespace pixdef::testing;

namespace {

// Brute-force candidate set of the clipped window.
std::set<PixelPos> window_candidates(PixelPos p, int r, int w, int h) {
  std::set<PixelPos> out;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (std::max(std::abs(x - p.x), std::abs(y - p.y)) <= r) out.insert({x, y});
    }
  }
  return out;
}

bool tuple_within_radius(const Image& original, PixelPos at, std::span<const double> value,
                         int r) {
  for (const auto& q : window_candidates(at, r, static_cast<int>(original.width()),
                                         static_cast<int>(original.height()))) {
    const auto t = original.pixel(q);
    if (std::equal(t.begin(), t.end(), value.begin())) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("random source is reproducible and in range") {
  RandomSource a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.uniform_index(7);
    CHECK(x == b.uniform_index(7));
    CHECK(x < 7);
    const double u = a.uniform01();
    CHECK(u == b.uniform01());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  // mt19937_64 reference value: the 10000th output for the default seed.
  std::mt19937_64 ref;
  ref.discard(9999);
  CHECK(ref() == 9981545732273789042ULL);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
}

TEST_CASE("sample_window corner of 100x100 with r=10 has 121 candidates") {
  const PixelPos corner{0, 0};
  const auto candidates = window_candidates(corner, 10, 100, 100);
  CHECK(candidates.size() == 121);
  RandomSource rng(5);
  std::map<PixelPos, int> hits;
  const int draws = 121 * 400;
  for (int i = 0; i < draws; ++i) {
    const PixelPos n = sample_window(corner, 10, 100, 100, rng);
    REQUIRE(candidates.count(n) == 1);
    ++hits[n];
  }
  CHECK(hits.size() == 121);
  for (const auto& [pos, count] : hits) {
    // 400 expected per cell; +-5.5 sd.
    CHECK(count > 290);
    CHECK(count < 510);
  }
}

TEST_CASE("sample_window covering the whole image is uniform over it") {
  RandomSource rng(9);
  std::map<PixelPos, int> hits;
  for (int i = 0; i < 12 * 2000; ++i) ++hits[sample_window({1, 2}, 50, 4, 3, rng)];
  CHECK(hits.size() == 12);
  for (const auto& [pos, count] : hits) {
    CHECK(count > 1750);
    CHECK(count < 2250);
  }
}

TEST_CASE("sample_window on a 1x1 image returns the pixel") {
  RandomSource rng(1);
  for (int i = 0; i < 10; ++i) CHECK(sample_window({0, 0}, 3, 1, 1, rng) == PixelPos{0, 0});
}

TEST_CASE("deflect_uniform edge cases") {
  const Image img = random_image(20, 30, 3, 77);
  RandomSource rng(1);
  CHECK(deflect_uniform(img, {10, 0}, rng) == img);
  const Image flat(20, 30, 3, 0.3);
  CHECK(deflect_uniform(flat, {4, 500}, rng) == flat);
  CHECK_THROWS_AS(deflect_uniform(img, {0, 10}, rng), Error);
  CHECK_THROWS_AS(deflect_uniform(img, {3, -1}, rng), Error);
}

TEST_CASE("deflect_uniform changes at most K pixels, all from within radius r") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Image img = random_image(40, 37, 3, seed + 100);
    RandomSource rng(seed);
    DeflectionTrace trace;
    const DeflectionParams params{3, 60};
    const Image out = deflect_uniform(img, params, rng, &trace);
    REQUIRE(trace.size() == 60);
    CHECK(changed_pixel_count(img, out) <= 60);

    // Replay the trace: last writer wins, reading from the original.
    Image replay = img;
    for (const auto& s : trace) {
      CHECK(std::max(std::abs(s.neighbor.x - s.target.x), std::abs(s.neighbor.y - s.target.y)) <= 3);
      replay.copy_pixel(img, s.neighbor, s.target);
    }
    CHECK(replay == out);
    for (std::size_t y = 0; y < img.height(); ++y) {
      for (std::size_t x = 0; x < img.width(); ++x) {
        const PixelPos p{static_cast<int>(x), static_cast<int>(y)};
        const auto a = img.pixel(p);
        const auto b = out.pixel(p);
        if (!std::equal(a.begin(), a.end(), b.begin())) {
          CHECK(tuple_within_radius(img, p, b, 3));
        }
      }
    }
  }
}

TEST_CASE("deflection is deterministic under a seed") {
  const Image img = random_image(32, 32, 3, 3);
  RandomSource a(99), b(99);
  CHECK(deflect_uniform(img, {10, 100}, a) == deflect_uniform(img, {10, 100}, b));
  ActivationMap map(32, 32, 0.4);
  RandomSource c(7), d(7);
  CHECK(deflect_targeted(img, map, {10, 100}, c) == deflect_targeted(img, map, {10, 100}, d));
}

TEST_CASE("targeted deflection with a saturated map changes nothing") {
  const Image img = random_image(16, 16, 3, 4);
  RandomSource rng(4);
  DeflectionTrace trace;
  const Image out = deflect_targeted(img, ActivationMap(16, 16, 1.0), {3, 1000}, rng, &trace);
  CHECK(out == img);
  CHECK(trace.size() == 1000);
  for (const auto& s : trace) CHECK(s.gated);
}

TEST_CASE("targeted deflection with a zero map deflects every attempt") {
  const Image img = random_image(16, 16, 3, 4);
  RandomSource rng(8);
  DeflectionTrace trace;
  deflect_targeted(img, ActivationMap(16, 16, 0.0), {3, 500}, rng, &trace);
  REQUIRE(trace.size() == 500);
  for (const auto& s : trace) CHECK_FALSE(s.gated);
}

TEST_CASE("half-blocked map confines deflection to the open half") {
  const std::size_t h = 40, w = 40;
  const Image img = random_image(h, w, 3, 12);
  ActivationMap map(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) map.at(y, x) = x < w / 2 ? 0.0 : 1.0;
  }
  RandomSource rng(2024);
  DeflectionTrace trace;
  const int k = 10000;
  const Image out = deflect_targeted(img, map, {3, k}, rng, &trace);
  int open = 0;
  for (const auto& s : trace) {
    if (!s.gated) {
      ++open;
      CHECK(s.target.x < static_cast<int>(w / 2));
    }
  }
  // Binomial(10000, 0.5): 99% interval is 5000 +- 2.576 * 50.
  CHECK(open > 5000 - 129);
  CHECK(open < 5000 + 129);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = w / 2; x < w; ++x) {
      const PixelPos p{static_cast<int>(x), static_cast<int>(y)};
      const auto a = img.pixel(p);
      const auto b = out.pixel(p);
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST_CASE("targeted deflection rejects mismatched maps") {
  RandomSource rng(1);
  CHECK_THROWS_AS(deflect_targeted(Image(8, 8, 3), ActivationMap(8, 9), {2, 5}, rng), Error);
}

TEST_CASE("monotone suppression under coupled draws") {
  // Replaying recorded (target, gate draw) pairs: anything blocked under the
  // smaller map stays blocked under the pointwise larger one.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomSource mrng(seed + 500);
    ActivationMap m1(24, 24), m2(24, 24);
    for (std::size_t i = 0; i < m1.values.size(); ++i) {
      m1.values[i] = mrng.uniform01();
      m2.values[i] = m1.values[i] + (1.0 - m1.values[i]) * mrng.uniform01();
    }
    const Image img = random_image(24, 24, 3, seed);
    RandomSource rng(seed);
    DeflectionTrace trace;
    deflect_targeted(img, m1, {2, 400}, rng, &trace);
    for (const auto& s : trace) {
      const auto y = static_cast<std::size_t>(s.target.y);
      const auto x = static_cast<std::size_t>(s.target.x);
      const bool blocked1 = !deflection_allowed(m1.at(y, x), s.gate_draw);
      const bool blocked2 = !deflection_allowed(m2.at(y, x), s.gate_draw);
      CHECK(blocked1 == s.gated);
      if (blocked1) CHECK(blocked2);
    }
  }
}

TEST_CASE("trace csv format") {
  DeflectionTrace t{{0, {1, 2}, {3, 4}, false, 0.5}, {1, {5, 6}, {-1, -1}, true, 0.1}};
  std::ostringstream out;
  write_trace_csv(t, out);
  CHECK(out.str() == "iteration,p_x,p_y,n_x,n_y,gated\n0,1,2,3,4,0\n1,5,6,-1,-1,1\n");
}
