#include "pixdef/deflect.h"

#include <algorithm>
#include <ostream>
#include <string>

#include "pixdef/error.h"

namespace pixdef {
namespace {

PixelPos draw_target(std::size_t width, std::size_t height, RandomSource& rng) {
  const std::uint64_t idx = rng.uniform_index(std::uint64_t{width} * height);
  return {static_cast<int>(idx % width), static_cast<int>(idx / width)};
}

void check_image(const Image& img) {
  if (img.empty()) throw Error("deflect: empty image");
}

}  // namespace

void validate(const DeflectionParams& params) {
  if (params.window < 1) {
    throw Error("deflect: window apothem must be >= 1, got " +
                std::to_string(params.window));
  }
  if (params.deflections < 0) {
    throw Error("deflect: deflection count must be >= 0, got " +
                std::to_string(params.deflections));
  }
}

void write_trace_csv(const DeflectionTrace& trace, std::ostream& out) {
  out << "iteration,p_x,p_y,n_x,n_y,gated\n";
  for (const auto& s : trace) {
    out << s.iteration << ',' << s.target.x << ',' << s.target.y << ','
        << s.neighbor.x << ',' << s.neighbor.y << ',' << (s.gated ? 1 : 0)
        << '\n';
  }
}

PixelPos sample_window(PixelPos p, int r, std::size_t width,
                       std::size_t height, RandomSource& rng) {
  const int w = static_cast<int>(width);
  const int h = static_cast<int>(height);
  const int x0 = std::max(0, p.x - r);
  const int x1 = std::min(w - 1, p.x + r);
  const int y0 = std::max(0, p.y - r);
  const int y1 = std::min(h - 1, p.y + r);
  const auto nx = static_cast<std::uint64_t>(x1 - x0 + 1);
  const auto ny = static_cast<std::uint64_t>(y1 - y0 + 1);
  const std::uint64_t idx = rng.uniform_index(nx * ny);
  return {x0 + static_cast<int>(idx % nx), y0 + static_cast<int>(idx / nx)};
}

Image deflect_uniform(const Image& img, const DeflectionParams& params,
                      RandomSource& rng, DeflectionTrace* trace) {
  validate(params);
  check_image(img);
  Image out = img;
  if (trace) trace->clear();
  for (int i = 0; i < params.deflections; ++i) {
    const PixelPos p = draw_target(img.width(), img.height(), rng);
    const PixelPos n = sample_window(p, params.window, img.width(), img.height(), rng);
    out.copy_pixel(img, n, p);
    if (trace) trace->push_back({i, p, n, false, -1.0});
  }
  return out;
}

Image deflect_targeted(const Image& img, const ActivationMap& map,
                       const DeflectionParams& params, RandomSource& rng,
                       DeflectionTrace* trace) {
  validate(params);
  check_image(img);
  if (map.height != img.height() || map.width != img.width()) {
    throw Error("deflect: activation map " + std::to_string(map.height) + "x" +
                std::to_string(map.width) + " does not match image " +
                std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
  Image out = img;
  if (trace) trace->clear();
  for (int i = 0; i < params.deflections; ++i) {
    const PixelPos p = draw_target(img.width(), img.height(), rng);
    const double v = map.at(static_cast<std::size_t>(p.y), static_cast<std::size_t>(p.x));
    const double u = rng.uniform01();
    if (!deflection_allowed(v, u)) {
      if (trace) trace->push_back({i, p, {-1, -1}, true, u});
      continue;
    }
    const PixelPos n = sample_window(p, params.window, img.width(), img.height(), rng);
    out.copy_pixel(img, n, p);
    if (trace) trace->push_back({i, p, n, false, u});
  }
  return out;
}

}  // namespace pixdef
