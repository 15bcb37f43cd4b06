#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pixdef/activation_map.h"
#include "pixdef/image.h"
#include "pixdef/random.h"

namespace pixdef {

struct DeflectionParams {
  int window = 10;        // apothem r of the square sampling window, >= 1
  int deflections = 100;  // loop iterations K, >= 0
};

void validate(const DeflectionParams& params);

// One loop iteration. `gated` marks a targeted attempt the map blocked; such
// rows carry no neighbour (neighbor = {-1,-1}). `gate_draw` is the uniform
// value the map was compared against (targeted variant only, else -1).
struct DeflectionStep {
  int iteration = 0;
  PixelPos target;
  PixelPos neighbor;
  bool gated = false;
  double gate_draw = -1.0;
};
using DeflectionTrace = std::vector<DeflectionStep>;

// CSV: iteration,p_x,p_y,n_x,n_y,gated
void write_trace_csv(const DeflectionTrace& trace, std::ostream& out);

// Uniform draw from the in-bounds pixels within Chebyshev distance r of p
// (p included). One uniform_index draw over the clipped window, row-major.
PixelPos sample_window(PixelPos p, int r, std::size_t width,
                       std::size_t height, RandomSource& rng);

// Pixel deflection. Output starts as a copy of `img`; each of the K
// iterations draws a target uniformly over the image, then a neighbour in
// its window, and copies the neighbour's channel tuple from the ORIGINAL
// image into the target position of the output.
Image deflect_uniform(const Image& img, const DeflectionParams& params,
                      RandomSource& rng, DeflectionTrace* trace = nullptr);

// Map-gated variant. Each of the K iterations draws the target, then a gate
// value u in [0,1); the target is deflected iff map(target) < u, in which
// case the neighbour is drawn. Blocked attempts consume no neighbour draw.
Image deflect_targeted(const Image& img, const ActivationMap& map,
                       const DeflectionParams& params, RandomSource& rng,
                       DeflectionTrace* trace = nullptr);

inline bool deflection_allowed(double map_value, double gate_draw) {
  return map_value < gate_draw;
}

}  // namespace pixdef
