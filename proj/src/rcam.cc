#include "pixdef/rcam.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "pixdef/error.h"

namespace pixdef {

ActivationMap::ActivationMap(std::size_t h, std::size_t w, std::vector<double> v)
    : height(h), width(w), values(std::move(v)) {
  if (values.size() != h * w) {
    throw Error("activation map: value count does not match dimensions");
  }
}

double ActivationMap::max_value() const {
  if (values.empty()) return 0.0;
  return *std::max_element(values.begin(), values.end());
}

ActivationMap cam_from_features(const FeatureStack& features,
                                const ClassWeights& weights, std::size_t cls) {
  if (cls >= weights.size()) {
    throw Error("cam: unknown class " + std::to_string(cls));
  }
  const auto& w = weights[cls];
  const std::size_t k = features.channels();
  if (k == 0) throw Error("cam: feature stack has no channels");
  if (w.size() != k) {
    throw Error("cam: weight vector length " + std::to_string(w.size()) +
                " does not match " + std::to_string(k) + " feature channels");
  }
  ActivationMap out(features.height(), features.width());
  const auto f = features.values();
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < k; ++c) acc += w[c] * f[i * k + c];
    out.values[i] = acc;
  }
  return out;
}

ActivationMap robust_map_unnormalized(std::span<const ActivationMap> maps) {
  if (maps.empty()) throw Error("robust_map: empty map list");
  ActivationMap out(maps[0].height, maps[0].width);
  double weight = 0.5;
  for (const auto& m : maps) {
    if (!m.same_shape(maps[0])) throw Error("robust_map: map shape mismatch");
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] += m.values[i] * weight;
    }
    weight *= 0.5;
  }
  for (double& v : out.values) v = std::max(v, 0.0);
  return out;
}

ActivationMap robust_map(std::span<const ActivationMap> maps) {
  ActivationMap out = robust_map_unnormalized(maps);
  const double peak = out.max_value();
  if (peak > 0.0) {
    for (double& v : out.values) v /= peak;
  }
  return out;
}

ActivationMap resize_map(const ActivationMap& map, std::size_t height,
                         std::size_t width) {
  if (height == 0 || width == 0) throw Error("resize_map: zero target dimension");
  if (map.height == 0 || map.width == 0) throw Error("resize_map: empty source map");
  if (map.height == height && map.width == width) return map;

  const bool unit_range = std::all_of(map.values.begin(), map.values.end(),
                                      [](double v) { return v >= 0.0 && v <= 1.0; });
  const auto coord = [](std::size_t i, std::size_t src, std::size_t dst) {
    if (dst == 1 || src == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(src - 1) /
           static_cast<double>(dst - 1);
  };

  ActivationMap out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = coord(y, map.height, height);
    const auto y0 = std::min(static_cast<std::size_t>(sy), map.height - 1);
    const std::size_t y1 = std::min(y0 + 1, map.height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = coord(x, map.width, width);
      const auto x0 = std::min(static_cast<std::size_t>(sx), map.width - 1);
      const std::size_t x1 = std::min(x0 + 1, map.width - 1);
      const double fx = sx - static_cast<double>(x0);
      const double top = map.at(y0, x0) * (1.0 - fx) + map.at(y0, x1) * fx;
      const double bottom = map.at(y1, x0) * (1.0 - fx) + map.at(y1, x1) * fx;
      double v = top * (1.0 - fy) + bottom * fy;
      if (unit_range) v = std::clamp(v, 0.0, 1.0);
      out.at(y, x) = v;
    }
  }
  return out;
}

std::vector<std::size_t> top_k_classes(std::span<const double> scores,
                                       std::size_t k) {
  if (k > scores.size()) {
    throw Error("top_k: k=" + std::to_string(k) + " exceeds class count " +
                std::to_string(scores.size()));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  order.resize(k);
  return order;
}

}  // namespace pixdef
