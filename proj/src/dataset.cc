#include "pixdef/dataset.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include "pixdef/error.h"
#include "pixdef/image_io.h"
#include "pixdef/random.h"

namespace pixdef {
namespace {

constexpr std::size_t kMaxClasses = 10;

// Shape coverage in [0,1] for class `cls` at normalised coordinates (u, v),
// both in [0,1), u along x.
double shape_mask(std::size_t cls, double u, double v) {
  const auto inside = [](double a, double lo, double hi) { return a >= lo && a < hi; };
  switch (cls) {
    case 0:  // square, top-left
      return inside(u, 0.10, 0.45) && inside(v, 0.10, 0.45) ? 1.0 : 0.0;
    case 1: {  // disk, centre
      const double du = u - 0.5, dv = v - 0.5;
      return du * du + dv * dv < 0.06 ? 1.0 : 0.0;
    }
    case 2:  // horizontal bar
      return inside(v, 0.40, 0.60) && inside(u, 0.08, 0.92) ? 1.0 : 0.0;
    case 3:  // vertical bar
      return inside(u, 0.40, 0.60) && inside(v, 0.08, 0.92) ? 1.0 : 0.0;
    case 4:  // diagonal ramp
      return std::clamp(1.2 * (u + v) / 2.0 - 0.1, 0.0, 1.0);
    case 5:  // cross
      return (inside(u, 0.42, 0.58) && inside(v, 0.15, 0.85)) ||
                     (inside(v, 0.42, 0.58) && inside(u, 0.15, 0.85))
                 ? 1.0
                 : 0.0;
    case 6: {  // ring
      const double du = u - 0.5, dv = v - 0.5;
      const double r2 = du * du + dv * dv;
      return r2 > 0.07 && r2 < 0.14 ? 1.0 : 0.0;
    }
    case 7:  // square, bottom-right
      return inside(u, 0.55, 0.90) && inside(v, 0.55, 0.90) ? 1.0 : 0.0;
    case 8:  // anti-diagonal stripe
      return std::abs(u + v - 1.0) < 0.12 ? 1.0 : 0.0;
    case 9:  // top band
      return inside(v, 0.05, 0.30) && inside(u, 0.10, 0.90) ? 1.0 : 0.0;
    default:
      return 0.0;
  }
}

Image render_sample(const SyntheticSpec& spec, std::size_t cls, RandomSource& rng) {
  const std::size_t n = spec.size;
  const double background = 0.3 + 0.2 * rng.uniform01();
  const double contrast = spec.contrast_min + (spec.contrast_max - spec.contrast_min) * rng.uniform01();
  const auto span = static_cast<std::uint64_t>(2 * spec.jitter + 1);
  const int dx = static_cast<int>(rng.uniform_index(span)) - spec.jitter;
  const int dy = static_cast<int>(rng.uniform_index(span)) - spec.jitter;
  // Tint is independent of the class and brighter than any background, so
  // only geometry is informative and shapes never invert contrast.
  std::array<double, 3> tint{};
  for (double& t : tint) t = 0.65 + 0.35 * rng.uniform01();

  Grid g(n, n, spec.channels);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double u = (static_cast<double>(x) - dx + 0.5) / static_cast<double>(n);
      const double v = (static_cast<double>(y) - dy + 0.5) / static_cast<double>(n);
      const double m = shape_mask(cls, u, v) * contrast;
      for (std::size_t c = 0; c < spec.channels; ++c) {
        const double target = spec.channels == 3 ? tint[c] : 0.9;
        g.at(y, x, c) = background * (1.0 - m) + target * m + spec.noise * rng.normal();
      }
    }
  }
  return Image::clamped(std::move(g));
}

}  // namespace

Dataset make_synthetic_dataset(const SyntheticSpec& spec, std::size_t count,
                               std::uint64_t seed) {
  if (spec.classes < 2 || spec.classes > kMaxClasses) {
    throw Error("synthetic: class count must be in [2, 10]");
  }
  if (spec.size < 4) throw Error("synthetic: image size must be >= 4");
  if (spec.channels != 1 && spec.channels != 3) throw Error("synthetic: channels must be 1 or 3");
  if (spec.jitter < 0) throw Error("synthetic: jitter must be >= 0");
  Dataset out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RandomSource rng(derive_seed(seed, i));
    const std::size_t cls = i % spec.classes;
    out.push_back({"synthetic_" + std::to_string(i), render_sample(spec, cls, rng), cls});
  }
  return out;
}

Dataset make_split_pattern_dataset(std::size_t count, std::size_t size,
                                   std::uint64_t seed) {
  Dataset out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RandomSource rng(derive_seed(seed, i));
    const std::size_t cls = i % 2;
    Grid g(size, size, 3);
    const double bright = 0.7 + 0.2 * rng.uniform01();
    const double dark = 0.1 + 0.2 * rng.uniform01();
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const bool left = x < size / 2;
        const double base = (left == (cls == 0)) ? bright : dark;
        for (std::size_t c = 0; c < 3; ++c) g.at(y, x, c) = base + 0.05 * rng.normal();
      }
    }
    out.push_back({"split_" + std::to_string(i), Image::clamped(std::move(g)), cls});
  }
  return out;
}

Dataset load_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open manifest " + manifest.string());
  Dataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("path,", 0) == 0) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw Error(manifest.string() + ":" + std::to_string(line_no) + ": expected path,label");
    }
    const std::string path = line.substr(0, comma);
    const std::string label_text = line.substr(comma + 1);
    std::size_t label = 0;
    const auto res = std::from_chars(label_text.data(), label_text.data() + label_text.size(), label);
    if (res.ec != std::errc() || res.ptr != label_text.data() + label_text.size()) {
      throw Error(manifest.string() + ":" + std::to_string(line_no) + ": bad label '" +
                  label_text + "'");
    }
    out.push_back({path, load_image(path), label});
  }
  if (out.empty()) throw Error("manifest " + manifest.string() + " lists no images");
  return out;
}

void write_manifest(const std::filesystem::path& manifest,
                    const std::vector<std::pair<std::string, std::size_t>>& rows) {
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw Error("cannot write " + manifest.string());
  out << "path,label\n";
  for (const auto& [path, label] : rows) out << path << ',' << label << '\n';
}

std::filesystem::path write_dataset(const Dataset& data,
                                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, std::size_t>> rows;
  rows.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto path = dir / ("img_" + std::to_string(i) + ".png");
    save_image(data[i].image, path);
    rows.emplace_back(path.string(), data[i].label);
  }
  const auto manifest = dir / "manifest.csv";
  write_manifest(manifest, rows);
  return manifest;
}

std::size_t class_count(const Dataset& data) {
  std::size_t m = 0;
  for (const auto& s : data) m = std::max(m, s.label + 1);
  return m;
}

}  // namespace pixdef
