#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace pixdef {

struct PixelPos {
  int x = 0;  // column
  int y = 0;  // row
  auto operator<=>(const PixelPos&) const = default;
};

// Unconstrained H x W x C real array, row-major and channel-interleaved.
// Carries gradients, feature stacks and anything else read from f32grid
// files that is not bound to the [0,1] intensity range.
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t height, std::size_t width, std::size_t channels,
       double fill = 0.0);
  Grid(std::size_t height, std::size_t width, std::size_t channels,
       std::vector<double> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return values_.size(); }

  double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
    return values_[(y * width_ + x) * channels_ + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return values_[(y * width_ + x) * channels_ + c];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const Grid& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  bool operator==(const Grid&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> values_;
};

// Image with 1 or 3 channels whose intensities all lie in [0,1].
// Every constructor enforces the range; the only mutator copies a whole
// pixel tuple from another image of the same shape.
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, std::size_t channels,
        double fill = 0.0);

  // Throws if any value is outside [0,1] or not finite.
  static Image from_values(std::size_t height, std::size_t width,
                           std::size_t channels, std::vector<double> values);
  static Image from_grid(Grid grid);
  // Clamps into [0,1]; NaN maps to 0.
  static Image clamped(Grid grid);

  std::size_t height() const { return grid_.height(); }
  std::size_t width() const { return grid_.width(); }
  std::size_t channels() const { return grid_.channels(); }
  std::size_t pixel_count() const { return height() * width(); }
  std::size_t size() const { return grid_.size(); }
  bool empty() const { return grid_.size() == 0; }

  double operator()(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return grid_.at(y, x, c);
  }
  std::span<const double> values() const { return grid_.values(); }
  std::span<const double> pixel(PixelPos p) const {
    return values().subspan(
        (static_cast<std::size_t>(p.y) * width() + static_cast<std::size_t>(p.x)) *
            channels(),
        channels());
  }
  const Grid& grid() const { return grid_; }

  void copy_pixel(const Image& source, PixelPos from, PixelPos to);

  bool same_shape(const Image& other) const {
    return grid_.same_shape(other.grid_);
  }
  bool operator==(const Image&) const = default;

 private:
  explicit Image(Grid grid) : grid_(std::move(grid)) {}
  Grid grid_;
};

// Full-range YCbCr on [0,1] values:
//   Y  = 0.299 R + 0.587 G + 0.114 B
//   Cb = 0.5 + (B - Y) * 0.5 / 1.772
//   Cr = 0.5 + (R - Y) * 0.5 / 1.402
// Both directions clamp their output to [0,1].
Image rgb_to_ycbcr(const Image& rgb);
Image ycbcr_to_rgb(const Image& ycc);

// sqrt(mean((a-b)^2)) over every element.
double normalized_rmse(const Image& a, const Image& b);
double normalized_rmse(const Grid& a, const Grid& b);

// Number of pixel positions whose channel tuples differ.
std::size_t changed_pixel_count(const Image& a, const Image& b);

}  // namespace pixdef
