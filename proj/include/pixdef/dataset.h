#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "pixdef/classifier.h"

namespace pixdef {

// Parameters of the synthetic shapes benchmark. Each class is a shape
// (square, disk, bars, ramp, cross, ring, ...) at a class-specific place,
// blended with a randomly tinted colour at random contrast and jittered in
// position, over a random grey background with additive Gaussian noise.
// Colour carries no class information.
struct SyntheticSpec {
  std::size_t classes = 8;  // 2..10
  std::size_t size = 32;
  std::size_t channels = 3;
  double noise = 0.08;
  int jitter = 2;
  double contrast_min = 0.2;
  double contrast_max = 0.5;
};

// `count` images with labels i % classes; image i depends only on
// (seed, i), so datasets of different sizes share prefixes.
Dataset make_synthetic_dataset(const SyntheticSpec& spec, std::size_t count,
                               std::uint64_t seed);

// Two-class set: class 0 is bright on the left half, class 1 on the right.
Dataset make_split_pattern_dataset(std::size_t count, std::size_t size,
                                   std::uint64_t seed);

// Manifest CSV: header "path,label", one image per row. Paths are taken
// relative to the current working directory.
Dataset load_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest,
                    const std::vector<std::pair<std::string, std::size_t>>& rows);

// Writes each image as <dir>/<prefix><index>.png plus <dir>/manifest.csv.
std::filesystem::path write_dataset(const Dataset& data,
                                    const std::filesystem::path& dir);

std::size_t class_count(const Dataset& data);

}  // namespace pixdef
