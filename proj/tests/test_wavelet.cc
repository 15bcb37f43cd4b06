#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pixdef/error.h"
#include "pixdef/wavelet.h"
#include "test_util.h"

using namespace pixdef;
using namespace pixdef::testing;

namespace {

double energy(const Plane& p) {
  return std::inner_product(p.data.begin(), p.data.end(), p.data.begin(), 0.0);
}

double pyramid_energy(const WaveletPyramid& pyr) {
  double e = energy(pyr.approximation);
  for (const auto& l : pyr.levels) e += energy(l.horizontal) + energy(l.vertical) + energy(l.diagonal);
  return e;
}

// One level by the defining sums with periodic indexing.
// xs selects low (false) or high (true) along x, ys likewise along y.
Plane direct_band(const Plane& x, WaveletFamily fam, bool high_x, bool high_y) {
  const auto h = lowpass_filter(fam);
  const std::size_t L = h.size();
  std::vector<double> g(L);
  for (std::size_t j = 0; j < L; ++j) g[j] = (j % 2 ? -1.0 : 1.0) * h[L - 1 - j];
  const auto fx = [&](std::size_t j) { return high_x ? g[j] : h[j]; };
  const auto fy = [&](std::size_t j) { return high_y ? g[j] : h[j]; };
  Plane out(x.rows / 2, x.cols / 2);
  for (std::size_t k = 0; k < out.rows; ++k) {
    for (std::size_t l = 0; l < out.cols; ++l) {
      double s = 0.0;
      for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < L; ++j) {
          s += fy(i) * fx(j) * x.at((2 * k + i) % x.rows, (2 * l + j) % x.cols);
        }
      }
      out.at(k, l) = s;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("family names and filters") {
  CHECK(parse_wavelet_family("db2") == WaveletFamily::db2);
  CHECK(parse_wavelet_family("haar") == WaveletFamily::haar);
  CHECK_FALSE(parse_wavelet_family("sym4").has_value());
  CHECK(to_string(WaveletFamily::db1) == "db1");
  const auto a = lowpass_filter(WaveletFamily::haar);
  const auto b = lowpass_filter(WaveletFamily::db1);
  CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  for (auto fam : {WaveletFamily::haar, WaveletFamily::db2}) {
    const auto h = lowpass_filter(fam);
    CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(std::inner_product(h.begin(), h.end(), h.begin(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  // db2 closed form
  const auto h = lowpass_filter(WaveletFamily::db2);
  const double s3 = std::sqrt(3.0), d = 4.0 * std::sqrt(2.0);
  CHECK(h[0] == doctest::Approx((1 + s3) / d).epsilon(1e-15));
  CHECK(h[1] == doctest::Approx((3 + s3) / d).epsilon(1e-15));
  CHECK(h[2] == doctest::Approx((3 - s3) / d).epsilon(1e-15));
  CHECK(h[3] == doctest::Approx((1 - s3) / d).epsilon(1e-15));
  CHECK(h[0] * h[2] + h[1] * h[3] == doctest::Approx(0.0));
}

TEST_CASE("max_levels") {
  CHECK(max_levels(16, 16) == 4);
  CHECK(max_levels(31, 37) == 4);
  CHECK(max_levels(299, 299) == 8);
  CHECK(max_levels(1, 100) == 0);
  CHECK(max_levels(0, 0) == 0);
}

TEST_CASE("2x2 constant block under haar") {
  const double c = 0.37;
  const Plane p(2, 2, c);
  const WaveletSpec spec{WaveletFamily::haar, 1};
  const auto pyr = dwt2(p, spec);
  REQUIRE(pyr.levels.size() == 1);
  CHECK(pyr.approximation.data[0] == doctest::Approx(2 * c).epsilon(1e-15));
  CHECK(std::abs(pyr.levels[0].horizontal.data[0]) < 1e-15);
  CHECK(std::abs(pyr.levels[0].vertical.data[0]) < 1e-15);
  CHECK(std::abs(pyr.levels[0].diagonal.data[0]) < 1e-15);
  const auto back = idwt2(pyr, spec);
  for (double v : back.data) CHECK(v == doctest::Approx(c).epsilon(1e-15));
}

TEST_CASE("zero input gives zero pyramid") {
  const auto pyr = dwt2(Plane(12, 10), {WaveletFamily::db2, 2});
  CHECK(pyramid_energy(pyr) == 0.0);
}

TEST_CASE("one level matches the defining sums") {
  for (auto fam : {WaveletFamily::haar, WaveletFamily::db2}) {
    const Plane x = random_plane(10, 14, 4);
    const auto pyr = dwt2(x, {fam, 1});
    CHECK(max_abs_diff(pyr.approximation.data, direct_band(x, fam, false, false).data) < 1e-12);
    CHECK(max_abs_diff(pyr.levels[0].horizontal.data, direct_band(x, fam, false, true).data) < 1e-12);
    CHECK(max_abs_diff(pyr.levels[0].vertical.data, direct_band(x, fam, true, false).data) < 1e-12);
    CHECK(max_abs_diff(pyr.levels[0].diagonal.data, direct_band(x, fam, true, true).data) < 1e-12);
  }
}

TEST_CASE("band orientation") {
  // Stripes varying along y only: horizontal detail carries all detail energy.
  Plane stripes(8, 8);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) stripes.at(r, c) = r % 2 ? 1.0 : 0.0;
  }
  const auto pyr = dwt2(stripes, {WaveletFamily::haar, 1});
  CHECK(energy(pyr.levels[0].horizontal) > 1.0);
  CHECK(energy(pyr.levels[0].vertical) < 1e-20);
  CHECK(energy(pyr.levels[0].diagonal) < 1e-20);
}

TEST_CASE("perfect reconstruction") {
  SUBCASE("32x32 haar 3 levels") {
    const Plane x = random_plane(32, 32, 1);
    const WaveletSpec spec{WaveletFamily::haar, 3};
    CHECK(max_abs_diff(idwt2(dwt2(x, spec), spec).data, x.data) < 1e-6);
  }
  SUBCASE("31x37 db2 2 levels") {
    const Plane x = random_plane(31, 37, 2);
    const WaveletSpec spec{WaveletFamily::db2, 2};
    const auto pyr = dwt2(x, spec);
    CHECK(pyr.rows() == 31);
    CHECK(pyr.cols() == 37);
    CHECK(pyr.coefficient_count() > 31 * 37);
    const auto back = idwt2(pyr, spec);
    REQUIRE(back.rows == 31);
    REQUIRE(back.cols == 37);
    CHECK(max_abs_diff(back.data, x.data) < 1e-6);
  }
  SUBCASE("every admissible level on odd and tiny sizes") {
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{2, 3}, {5, 5}, {7, 16}, {33, 9}}) {
      for (auto fam : {WaveletFamily::haar, WaveletFamily::db1, WaveletFamily::db2}) {
        for (int lv = 1; lv <= max_levels(r, c); ++lv) {
          const Plane x = random_plane(r, c, r * 100 + c + lv);
          const WaveletSpec spec{fam, lv};
          CHECK(max_abs_diff(idwt2(dwt2(x, spec), spec).data, x.data) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("energy is preserved on power-of-two sizes") {
  for (auto fam : {WaveletFamily::haar, WaveletFamily::db2}) {
    const Plane x = random_plane(64, 64, 9);
    const auto pyr = dwt2(x, {fam, 4});
    CHECK(pyr.coefficient_count() == 64 * 64);
    CHECK(std::abs(pyramid_energy(pyr) - energy(x)) / energy(x) < 1e-9);
  }
}

TEST_CASE("parallel transform agrees with the matrix reference") {
  for (auto fam : {WaveletFamily::haar, WaveletFamily::db2}) {
    const Plane x = random_plane(131, 97, 5);
    const WaveletSpec spec{fam, 3};
    const auto fast = dwt2(x, spec);
    const auto ref = reference::dwt2(x, spec);
    REQUIRE(fast.levels.size() == ref.levels.size());
    CHECK(max_abs_diff(fast.approximation.data, ref.approximation.data) < 1e-12);
    for (std::size_t l = 0; l < fast.levels.size(); ++l) {
      CHECK(fast.levels[l].rows == ref.levels[l].rows);
      CHECK(max_abs_diff(fast.levels[l].horizontal.data, ref.levels[l].horizontal.data) < 1e-12);
      CHECK(max_abs_diff(fast.levels[l].vertical.data, ref.levels[l].vertical.data) < 1e-12);
      CHECK(max_abs_diff(fast.levels[l].diagonal.data, ref.levels[l].diagonal.data) < 1e-12);
    }
    CHECK(max_abs_diff(idwt2(fast, spec).data, reference::idwt2(fast, spec).data) < 1e-12);
  }
}

TEST_CASE("inadmissible level counts are rejected") {
  CHECK_THROWS_AS(dwt2(Plane(16, 16), {WaveletFamily::haar, 5}), Error);
  CHECK_THROWS_AS(dwt2(Plane(16, 16), {WaveletFamily::haar, 0}), Error);
  CHECK_THROWS_AS(dwt2(Plane(1, 16), {WaveletFamily::haar, 1}), Error);
}
