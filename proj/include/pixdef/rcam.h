#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pixdef/activation_map.h"
#include "pixdef/image.h"

namespace pixdef {

// Spatial feature stack f_k(x,y): k channels over an H x W grid.
using FeatureStack = Grid;

// One weight vector per class, each of length = feature channel count.
using ClassWeights = std::vector<std::vector<double>>;

// M_c(x,y) = sum_k w_k^c f_k(x,y). Raw: unnormalised, possibly negative.
ActivationMap cam_from_features(const FeatureStack& features,
                                const ClassWeights& weights, std::size_t cls);

// sum_{i=1..k} maps[i-1] / 2^i, with negative values clamped to 0.
// `maps` is ordered by descending class score.
ActivationMap robust_map_unnormalized(std::span<const ActivationMap> maps);

// robust_map_unnormalized divided by its maximum; an all-zero combination is
// returned as is.
ActivationMap robust_map(std::span<const ActivationMap> maps);

// Corner-aligned bilinear resampling. Output is clamped to [0,1] when every
// input value already lies there.
ActivationMap resize_map(const ActivationMap& map, std::size_t height,
                         std::size_t width);

// Indices of the k largest scores, descending; equal scores keep the lower
// index first.
std::vector<std::size_t> top_k_classes(std::span<const double> scores,
                                       std::size_t k);

inline constexpr std::size_t kDefaultTopK = 5;

}  // namespace pixdef
