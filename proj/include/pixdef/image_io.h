#pragma once

#include <cstdint>
#include <filesystem>

#include "pixdef/image.h"

namespace pixdef {

// f32grid layout (all little-endian):
//   "F32G" | u32 height | u32 width | u32 channels | float32 values...
// Values are row-major and channel-interleaved.
Grid read_f32grid(const std::filesystem::path& path);
void write_f32grid(const Grid& grid, const std::filesystem::path& path);

// Dispatches on file content: PNG signature or "F32G" magic.
// 8-bit PNG bytes map to v/255; alpha is dropped; 16-bit PNGs are rejected.
Image load_image(const std::filesystem::path& path);

// ".png" writes an 8-bit PNG with round-half-up quantisation
// (byte = floor(v*255 + 0.5)); any other extension writes f32grid.
void save_image(const Image& img, const std::filesystem::path& path);

std::uint8_t quantize_to_byte(double v);

// Largest accepted height*width*channels for any loaded file.
inline constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 28;

}  // namespace pixdef
