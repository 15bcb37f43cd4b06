#include "pixdef/wavelet.h"

#include <array>
#include <bit>
#include <string>

#include "pixdef/error.h"

namespace pixdef {
namespace {

// haar / db1: 1/sqrt(2) = 0.707106781186548
constexpr std::array<double, 2> kHaar = {0.70710678118654752, 0.70710678118654752};

// Daubechies 4-tap, h_j = (1+sqrt3, 3+sqrt3, 3-sqrt3, 1-sqrt3)_j / (4 sqrt2):
//   0.482962913144534, 0.836516303737808, 0.224143868042013, -0.129409522551260
constexpr std::array<double, 4> kDb2 = {0.48296291314453414, 0.83651630373780791,
                                        0.22414386804201338, -0.12940952255126038};

// Above this many samples per pass, row/column loops run under OpenMP.
constexpr std::size_t kParallelWork = 64 * 64;

struct Filters {
  std::span<const double> lo;
  std::vector<double> hi;  // g_j = (-1)^j h_{L-1-j}
};

Filters make_filters(WaveletFamily family) {
  Filters f{lowpass_filter(family), {}};
  const std::size_t n = f.lo.size();
  f.hi.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    f.hi[j] = ((j % 2) ? -1.0 : 1.0) * f.lo[n - 1 - j];
  }
  return f;
}

void validate_spec(const WaveletSpec& spec, std::size_t rows, std::size_t cols) {
  if (spec.levels < 1) throw Error("dwt2: levels must be >= 1");
  if (rows == 0 || cols == 0) throw Error("dwt2: empty input");
  if (spec.levels > max_levels(rows, cols)) {
    throw Error("dwt2: " + std::to_string(spec.levels) + " levels requested but a " +
                std::to_string(rows) + "x" + std::to_string(cols) +
                " input admits at most " + std::to_string(max_levels(rows, cols)));
  }
}

Plane pad_even(const Plane& in) {
  const std::size_t pr = in.rows + in.rows % 2;
  const std::size_t pc = in.cols + in.cols % 2;
  if (pr == in.rows && pc == in.cols) return in;
  Plane out(pr, pc);
  for (std::size_t r = 0; r < pr; ++r) {
    const std::size_t sr = r < in.rows ? r : in.rows - 1;
    for (std::size_t c = 0; c < pc; ++c) {
      out.at(r, c) = in.at(sr, c < in.cols ? c : in.cols - 1);
    }
  }
  return out;
}

Plane crop(const Plane& in, std::size_t rows, std::size_t cols) {
  if (in.rows == rows && in.cols == cols) return in;
  Plane out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = in.at(r, c);
  }
  return out;
}

// a[k] = sum_j lo[j] x[(2k+j) mod n], d[k] = sum_j hi[j] x[(2k+j) mod n]
void analyze_rows(const Plane& in, const Filters& f, Plane& lo, Plane& hi) {
  const std::size_t n = in.cols;
  const std::size_t half = n / 2;
  const std::size_t taps = f.lo.size();
  lo = Plane(in.rows, half);
  hi = Plane(in.rows, half);
  const auto rows = static_cast<std::ptrdiff_t>(in.rows);
#pragma omp parallel for schedule(static) if (in.data.size() > kParallelWork)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double* x = in.data.data() + r * n;
    double* a = lo.data.data() + r * half;
    double* d = hi.data.data() + r * half;
    for (std::size_t k = 0; k < half; ++k) {
      double sa = 0.0, sd = 0.0;
      for (std::size_t j = 0; j < taps; ++j) {
        const double v = x[(2 * k + j) % n];
        sa += f.lo[j] * v;
        sd += f.hi[j] * v;
      }
      a[k] = sa;
      d[k] = sd;
    }
  }
}

void analyze_cols(const Plane& in, const Filters& f, Plane& lo, Plane& hi) {
  const std::size_t n = in.rows;
  const std::size_t half = n / 2;
  const std::size_t cols = in.cols;
  const std::size_t taps = f.lo.size();
  lo = Plane(half, cols);
  hi = Plane(half, cols);
  const auto out_rows = static_cast<std::ptrdiff_t>(half);
#pragma omp parallel for schedule(static) if (in.data.size() > kParallelWork)
  for (std::ptrdiff_t k = 0; k < out_rows; ++k) {
    double* a = lo.data.data() + k * cols;
    double* d = hi.data.data() + k * cols;
    for (std::size_t j = 0; j < taps; ++j) {
      const double* x = in.data.data() + ((2 * k + j) % n) * cols;
      const double cl = f.lo[j];
      const double ch = f.hi[j];
      for (std::size_t c = 0; c < cols; ++c) {
        a[c] += cl * x[c];
        d[c] += ch * x[c];
      }
    }
  }
}

// Transpose of the analysis operator, written as a gather:
// x[n] = sum_{j : j = n mod 2} lo[j] a[k] + hi[j] d[k],  k = ((n - j) mod N) / 2
std::size_t source_index(std::size_t n, std::size_t j, std::size_t len) {
  return ((n + len * ((j / len) + 1) - j) % len) / 2;
}

Plane synthesize_rows(const Plane& lo, const Plane& hi, const Filters& f) {
  const std::size_t half = lo.cols;
  const std::size_t n = 2 * half;
  const std::size_t taps = f.lo.size();
  Plane out(lo.rows, n);
  const auto rows = static_cast<std::ptrdiff_t>(lo.rows);
#pragma omp parallel for schedule(static) if (out.data.size() > kParallelWork)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double* a = lo.data.data() + r * half;
    const double* d = hi.data.data() + r * half;
    double* x = out.data.data() + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = i % 2; j < taps; j += 2) {
        const std::size_t k = source_index(i, j, n);
        s += f.lo[j] * a[k] + f.hi[j] * d[k];
      }
      x[i] = s;
    }
  }
  return out;
}

Plane synthesize_cols(const Plane& lo, const Plane& hi, const Filters& f) {
  const std::size_t half = lo.rows;
  const std::size_t n = 2 * half;
  const std::size_t cols = lo.cols;
  const std::size_t taps = f.lo.size();
  Plane out(n, cols);
  const auto out_rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (out.data.size() > kParallelWork)
  for (std::ptrdiff_t i = 0; i < out_rows; ++i) {
    double* x = out.data.data() + i * cols;
    for (std::size_t j = static_cast<std::size_t>(i) % 2; j < taps; j += 2) {
      const std::size_t k = source_index(static_cast<std::size_t>(i), j, n);
      const double* a = lo.data.data() + k * cols;
      const double* d = hi.data.data() + k * cols;
      const double cl = f.lo[j];
      const double ch = f.hi[j];
      for (std::size_t c = 0; c < cols; ++c) x[c] += cl * a[c] + ch * d[c];
    }
  }
  return out;
}

void check_band(const Plane& band, std::size_t rows, std::size_t cols,
                const char* name) {
  if (band.rows != rows || band.cols != cols || band.data.size() != rows * cols) {
    throw Error(std::string("idwt2: ") + name + " band has shape " +
                std::to_string(band.rows) + "x" + std::to_string(band.cols) +
                ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void check_pyramid(const WaveletPyramid& pyr, const WaveletSpec& spec) {
  if (pyr.levels.empty()) throw Error("idwt2: pyramid has no levels");
  if (static_cast<int>(pyr.levels.size()) != spec.levels) {
    throw Error("idwt2: pyramid has " + std::to_string(pyr.levels.size()) +
                " levels, spec has " + std::to_string(spec.levels));
  }
  for (std::size_t l = 0; l < pyr.levels.size(); ++l) {
    const auto& lev = pyr.levels[l];
    const std::size_t hr = (lev.rows + 1) / 2;
    const std::size_t hc = (lev.cols + 1) / 2;
    check_band(lev.horizontal, hr, hc, "horizontal");
    check_band(lev.vertical, hr, hc, "vertical");
    check_band(lev.diagonal, hr, hc, "diagonal");
    const bool last = l + 1 == pyr.levels.size();
    const std::size_t nr = last ? pyr.approximation.rows : pyr.levels[l + 1].rows;
    const std::size_t nc = last ? pyr.approximation.cols : pyr.levels[l + 1].cols;
    if (nr != hr || nc != hc) throw Error("idwt2: inconsistent level bookkeeping");
  }
  check_band(pyr.approximation, pyr.approximation.rows, pyr.approximation.cols,
             "approximation");
}

}  // namespace

Plane::Plane(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw Error("plane: value count does not match shape");
}

std::optional<WaveletFamily> parse_wavelet_family(std::string_view name) {
  if (name == "haar") return WaveletFamily::haar;
  if (name == "db1") return WaveletFamily::db1;
  if (name == "db2") return WaveletFamily::db2;
  return std::nullopt;
}

std::string_view to_string(WaveletFamily family) {
  switch (family) {
    case WaveletFamily::haar: return "haar";
    case WaveletFamily::db1: return "db1";
    case WaveletFamily::db2: return "db2";
  }
  return "unknown";
}

std::span<const double> lowpass_filter(WaveletFamily family) {
  if (family == WaveletFamily::db2) return kDb2;
  return kHaar;
}

int max_levels(std::size_t rows, std::size_t cols) {
  const std::size_t m = std::min(rows, cols);
  if (m == 0) return 0;
  return static_cast<int>(std::bit_width(m)) - 1;
}

std::size_t WaveletPyramid::coefficient_count() const {
  std::size_t n = approximation.data.size();
  for (const auto& l : levels) {
    n += l.horizontal.data.size() + l.vertical.data.size() + l.diagonal.data.size();
  }
  return n;
}

WaveletPyramid dwt2(const Plane& input, const WaveletSpec& spec) {
  validate_spec(spec, input.rows, input.cols);
  const Filters f = make_filters(spec.family);
  WaveletPyramid pyr;
  Plane current = input;
  for (int l = 0; l < spec.levels; ++l) {
    DetailLevel level;
    level.rows = current.rows;
    level.cols = current.cols;
    const Plane padded = pad_even(current);
    Plane lo, hi;
    analyze_rows(padded, f, lo, hi);
    Plane ll;
    analyze_cols(lo, f, ll, level.horizontal);
    analyze_cols(hi, f, level.vertical, level.diagonal);
    pyr.levels.push_back(std::move(level));
    current = std::move(ll);
  }
  pyr.approximation = std::move(current);
  return pyr;
}

Plane idwt2(const WaveletPyramid& pyr, const WaveletSpec& spec) {
  check_pyramid(pyr, spec);
  const Filters f = make_filters(spec.family);
  Plane current = pyr.approximation;
  for (auto it = pyr.levels.rbegin(); it != pyr.levels.rend(); ++it) {
    const Plane lo = synthesize_cols(current, it->horizontal, f);
    const Plane hi = synthesize_cols(it->vertical, it->diagonal, f);
    current = crop(synthesize_rows(lo, hi, f), it->rows, it->cols);
  }
  return current;
}

namespace reference {
namespace {

// N x N orthogonal matrix: rows [0, N/2) low-pass, rows [N/2, N) high-pass.
std::vector<double> analysis_matrix(const Filters& f, std::size_t n) {
  std::vector<double> m(n * n, 0.0);
  const std::size_t half = n / 2;
  for (std::size_t k = 0; k < half; ++k) {
    for (std::size_t j = 0; j < f.lo.size(); ++j) {
      m[k * n + (2 * k + j) % n] += f.lo[j];
      m[(half + k) * n + (2 * k + j) % n] += f.hi[j];
    }
  }
  return m;
}

// out = A * column for every column (transpose=false), or A^T * column.
Plane apply_along_rows(const Plane& in, const std::vector<double>& a, bool transpose) {
  const std::size_t n = in.rows;
  Plane out(n, in.cols);
  for (std::size_t c = 0; c < in.cols; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        s += (transpose ? a[j * n + i] : a[i * n + j]) * in.at(j, c);
      }
      out.at(i, c) = s;
    }
  }
  return out;
}

Plane apply_along_cols(const Plane& in, const std::vector<double>& a, bool transpose) {
  const std::size_t n = in.cols;
  Plane out(in.rows, n);
  for (std::size_t r = 0; r < in.rows; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        s += (transpose ? a[j * n + i] : a[i * n + j]) * in.at(r, j);
      }
      out.at(r, i) = s;
    }
  }
  return out;
}

Plane block(const Plane& in, std::size_t r0, std::size_t c0, std::size_t rows,
            std::size_t cols) {
  Plane out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = in.at(r0 + r, c0 + c);
  }
  return out;
}

void place(Plane& dst, const Plane& src, std::size_t r0, std::size_t c0) {
  for (std::size_t r = 0; r < src.rows; ++r) {
    for (std::size_t c = 0; c < src.cols; ++c) dst.at(r0 + r, c0 + c) = src.at(r, c);
  }
}

}  // namespace

WaveletPyramid dwt2(const Plane& input, const WaveletSpec& spec) {
  validate_spec(spec, input.rows, input.cols);
  const Filters f = make_filters(spec.family);
  WaveletPyramid pyr;
  Plane current = input;
  for (int l = 0; l < spec.levels; ++l) {
    const Plane padded = pad_even(current);
    const std::size_t hr = padded.rows / 2;
    const std::size_t hc = padded.cols / 2;
    const Plane t = apply_along_rows(
        apply_along_cols(padded, analysis_matrix(f, padded.cols), false),
        analysis_matrix(f, padded.rows), false);
    DetailLevel level;
    level.rows = current.rows;
    level.cols = current.cols;
    level.horizontal = block(t, hr, 0, hr, hc);
    level.vertical = block(t, 0, hc, hr, hc);
    level.diagonal = block(t, hr, hc, hr, hc);
    current = block(t, 0, 0, hr, hc);
    pyr.levels.push_back(std::move(level));
  }
  pyr.approximation = std::move(current);
  return pyr;
}

Plane idwt2(const WaveletPyramid& pyr, const WaveletSpec& spec) {
  check_pyramid(pyr, spec);
  const Filters f = make_filters(spec.family);
  Plane current = pyr.approximation;
  for (auto it = pyr.levels.rbegin(); it != pyr.levels.rend(); ++it) {
    const std::size_t hr = current.rows;
    const std::size_t hc = current.cols;
    Plane t(2 * hr, 2 * hc);
    place(t, current, 0, 0);
    place(t, it->horizontal, hr, 0);
    place(t, it->vertical, 0, hc);
    place(t, it->diagonal, hr, hc);
    const Plane x = apply_along_cols(
        apply_along_rows(t, analysis_matrix(f, t.rows), true),
        analysis_matrix(f, t.cols), true);
    current = crop(x, it->rows, it->cols);
  }
  return current;
}

}  // namespace reference
}  // namespace pixdef
