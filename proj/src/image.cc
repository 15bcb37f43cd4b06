#include "pixdef/image.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "pixdef/error.h"

namespace pixdef {
namespace {

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;
constexpr double kCbScale = 0.5 / 1.772;
constexpr double kCrScale = 0.5 / 1.402;

double clamp01(double v) {
  if (!(v > 0.0)) return 0.0;  // also catches NaN
  return v < 1.0 ? v : 1.0;
}

void require_color(const Image& img, const char* op) {
  if (img.channels() != 3) {
    throw Error(std::string(op) + ": expected 3 channels, got " +
                std::to_string(img.channels()));
  }
}

}  // namespace

Grid::Grid(std::size_t height, std::size_t width, std::size_t channels,
           double fill)
    : height_(height),
      width_(width),
      channels_(channels),
      values_(height * width * channels, fill) {}

Grid::Grid(std::size_t height, std::size_t width, std::size_t channels,
           std::vector<double> values)
    : height_(height),
      width_(width),
      channels_(channels),
      values_(std::move(values)) {
  if (values_.size() != height * width * channels) {
    throw Error("grid: value count " + std::to_string(values_.size()) +
                " does not match " + std::to_string(height) + "x" +
                std::to_string(width) + "x" + std::to_string(channels));
  }
}

Image::Image(std::size_t height, std::size_t width, std::size_t channels,
             double fill)
    : grid_(height, width, channels, fill) {
  if (channels != 1 && channels != 3) {
    throw Error("image: channel count must be 1 or 3");
  }
  if (!(fill >= 0.0 && fill <= 1.0)) {
    throw Error("image: fill value outside [0,1]");
  }
}

Image Image::from_values(std::size_t height, std::size_t width,
                         std::size_t channels, std::vector<double> values) {
  return from_grid(Grid(height, width, channels, std::move(values)));
}

Image Image::from_grid(Grid grid) {
  if (grid.channels() != 1 && grid.channels() != 3) {
    throw Error("image: channel count must be 1 or 3");
  }
  for (double v : grid.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error("image: intensity " + std::to_string(v) + " outside [0,1]");
    }
  }
  return Image(std::move(grid));
}

Image Image::clamped(Grid grid) {
  if (grid.channels() != 1 && grid.channels() != 3) {
    throw Error("image: channel count must be 1 or 3");
  }
  for (double& v : grid.values()) v = clamp01(v);
  return Image(std::move(grid));
}

void Image::copy_pixel(const Image& source, PixelPos from, PixelPos to) {
  const auto src = source.pixel(from);
  const std::size_t base =
      (static_cast<std::size_t>(to.y) * width() + static_cast<std::size_t>(to.x)) *
      channels();
  std::copy(src.begin(), src.end(), grid_.values().begin() + base);
}

Image rgb_to_ycbcr(const Image& rgb) {
  require_color(rgb, "rgb_to_ycbcr");
  Grid out(rgb.height(), rgb.width(), 3);
  const auto in = rgb.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < in.size(); i += 3) {
    const double r = in[i], g = in[i + 1], b = in[i + 2];
    const double y = kLumaR * r + kLumaG * g + kLumaB * b;
    dst[i] = y;
    dst[i + 1] = 0.5 + (b - y) * kCbScale;
    dst[i + 2] = 0.5 + (r - y) * kCrScale;
  }
  return Image::clamped(std::move(out));
}

Image ycbcr_to_rgb(const Image& ycc) {
  require_color(ycc, "ycbcr_to_rgb");
  Grid out(ycc.height(), ycc.width(), 3);
  const auto in = ycc.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < in.size(); i += 3) {
    const double y = in[i], cb = in[i + 1], cr = in[i + 2];
    const double r = y + (cr - 0.5) / kCrScale;
    const double b = y + (cb - 0.5) / kCbScale;
    dst[i] = r;
    dst[i + 1] = (y - kLumaR * r - kLumaB * b) / kLumaG;
    dst[i + 2] = b;
  }
  return Image::clamped(std::move(out));
}

double normalized_rmse(const Grid& a, const Grid& b) {
  if (!a.same_shape(b)) throw Error("normalized_rmse: shape mismatch");
  if (a.size() == 0) return 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(va.size()));
}

double normalized_rmse(const Image& a, const Image& b) {
  return normalized_rmse(a.grid(), b.grid());
}

std::size_t changed_pixel_count(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw Error("changed_pixel_count: shape mismatch");
  const std::size_t c = a.channels();
  const auto va = a.values();
  const auto vb = b.values();
  std::size_t changed = 0;
  for (std::size_t i = 0; i < va.size(); i += c) {
    if (!std::equal(va.begin() + i, va.begin() + i + c, vb.begin() + i)) {
      ++changed;
    }
  }
  return changed;
}

}  // namespace pixdef
