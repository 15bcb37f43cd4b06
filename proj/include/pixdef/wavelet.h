#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pixdef {

enum class WaveletFamily { haar, db1, db2 };

std::optional<WaveletFamily> parse_wavelet_family(std::string_view name);
std::string_view to_string(WaveletFamily family);

// Orthonormal analysis low-pass filter. haar and db1 share h = [1/sqrt2, 1/sqrt2].
std::span<const double> lowpass_filter(WaveletFamily family);

struct WaveletSpec {
  WaveletFamily family = WaveletFamily::db1;
  int levels = 4;
};

inline constexpr int kDefaultLevels = 4;

// floor(log2(min(rows, cols))); 0 for empty input.
int max_levels(std::size_t rows, std::size_t cols);

// Row-major 2-D real array.
struct Plane {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Plane() = default;
  Plane(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}
  Plane(std::size_t r, std::size_t c, std::vector<double> values);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool operator==(const Plane&) const = default;
};

// One decomposition level. `rows`/`cols` are the size of the band that was
// decomposed, before odd dimensions were padded by replicating the last
// row/column; the inverse crops back to them.
struct DetailLevel {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Plane horizontal;  // low-pass along x, high-pass along y
  Plane vertical;    // high-pass along x, low-pass along y
  Plane diagonal;    // high-pass along both
};

struct WaveletPyramid {
  std::vector<DetailLevel> levels;  // levels[0] is the finest scale
  Plane approximation;              // final LL band

  std::size_t rows() const { return levels.empty() ? approximation.rows : levels[0].rows; }
  std::size_t cols() const { return levels.empty() ? approximation.cols : levels[0].cols; }
  std::size_t coefficient_count() const;
};

// Separable orthonormal DWT, repeated on the LL band. Each level pads odd
// dimensions by one replicated sample, then filters with periodic extension.
WaveletPyramid dwt2(const Plane& input, const WaveletSpec& spec);
Plane idwt2(const WaveletPyramid& pyramid, const WaveletSpec& spec);

// Serial reference transforms built from explicit orthogonal analysis
// matrices. Used by tests and benchmarks as the baseline for dwt2/idwt2.
namespace reference {
WaveletPyramid dwt2(const Plane& input, const WaveletSpec& spec);
Plane idwt2(const WaveletPyramid& pyramid, const WaveletSpec& spec);
}  // namespace reference

}  // namespace pixdef
