#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pixdef {

// H x W array of saliency weights. Raw class activation maps may hold any
// real value; normalised maps hold values in [0,1].
struct ActivationMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  ActivationMap() = default;
  ActivationMap(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), values(h * w, fill) {}
  ActivationMap(std::size_t h, std::size_t w, std::vector<double> v);

  double& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  bool same_shape(const ActivationMap& o) const {
    return height == o.height && width == o.width;
  }
  double max_value() const;
  bool operator==(const ActivationMap&) const = default;
};

}  // namespace pixdef
