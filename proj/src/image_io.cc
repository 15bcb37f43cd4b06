#include "pixdef/image_io.h"

#include <png.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pixdef/error.h"

namespace pixdef {
namespace {

constexpr std::array<char, 4> kF32Magic = {'F', '3', '2', 'G'};
constexpr std::array<unsigned char, 8> kPngSignature = {0x89, 'P', 'N', 'G',
                                                        0x0D, 0x0A, 0x1A, 0x0A};

static_assert(std::numeric_limits<float>::is_iec559);

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
         (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

bool is_png(const std::vector<unsigned char>& bytes) {
  return bytes.size() >= kPngSignature.size() &&
         std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin());
}

Grid parse_f32grid(const std::vector<unsigned char>& bytes,
                   const std::string& name) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kF32Magic.data(), 4) != 0) {
    throw Error(name + ": not an f32grid file");
  }
  const std::uint64_t h = get_u32(bytes.data() + 4);
  const std::uint64_t w = get_u32(bytes.data() + 8);
  const std::uint64_t c = get_u32(bytes.data() + 12);
  if (h == 0 || w == 0 || c == 0) throw Error(name + ": zero dimension");
  if (h * w > kMaxElements || h * w * c > kMaxElements) {
    throw Error(name + ": dimension overflow");
  }
  const std::uint64_t n = h * w * c;
  if (bytes.size() != 16 + 4 * n) {
    throw Error(name + ": payload size does not match header");
  }
  std::vector<double> values(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    values[i] = static_cast<double>(
        std::bit_cast<float>(get_u32(bytes.data() + 16 + 4 * i)));
  }
  return Grid(h, w, c, std::move(values));
}

Image decode_png(const std::vector<unsigned char>& bytes,
                 const std::string& name) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(name + ": " + png.message);
  }
  if (PNG_IMAGE_SAMPLE_COMPONENT_SIZE(png.format) != 1 &&
      (png.format & PNG_FORMAT_FLAG_COLORMAP) == 0) {
    png_image_free(&png);
    throw Error(name + ": unsupported bit depth (only 8-bit PNG is accepted)");
  }
  const std::uint64_t h = png.height;
  const std::uint64_t w = png.width;
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const std::size_t channels = color ? 3 : 1;
  if (h * w * 4 > kMaxElements) {
    png_image_free(&png);
    throw Error(name + ": dimension overflow");
  }
  // Read with alpha and discard it so colour values are never composited.
  png.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GA;
  const std::size_t stride_in = color ? 4 : 2;
  std::vector<unsigned char> raw(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(name + ": " + msg);
  }
  std::vector<double> values(h * w * channels);
  for (std::size_t i = 0; i < h * w; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      values[i * channels + c] = raw[i * stride_in + c] / 255.0;
    }
  }
  return Image::from_values(h, w, channels, std::move(values));
}

void encode_png(const Image& img, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> raw(img.size());
  const auto v = img.values();
  for (std::size_t i = 0; i < v.size(); ++i) raw[i] = quantize_to_byte(v[i]);
  if (!png_image_write_to_file(&png, path.c_str(), 0, raw.data(), 0, nullptr)) {
    throw Error("cannot write " + path.string() + ": " + png.message);
  }
}

}  // namespace

std::uint8_t quantize_to_byte(double v) {
  const double scaled = std::floor(v * 255.0 + 0.5);
  if (!(scaled > 0.0)) return 0;
  return scaled >= 255.0 ? 255 : static_cast<std::uint8_t>(scaled);
}

Grid read_f32grid(const std::filesystem::path& path) {
  return parse_f32grid(read_all(path), path.string());
}

void write_f32grid(const Grid& grid, const std::filesystem::path& path) {
  std::vector<char> out;
  out.reserve(16 + 4 * grid.size());
  out.insert(out.end(), kF32Magic.begin(), kF32Magic.end());
  put_u32(out, static_cast<std::uint32_t>(grid.height()));
  put_u32(out, static_cast<std::uint32_t>(grid.width()));
  put_u32(out, static_cast<std::uint32_t>(grid.channels()));
  for (double v : grid.values()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error("cannot write " + path.string());
}

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  if (is_png(bytes)) return decode_png(bytes, path.string());
  return Image::from_grid(parse_f32grid(bytes, path.string()));
}

void save_image(const Image& img, const std::filesystem::path& path) {
  if (img.empty()) throw Error("save_image: empty image");
  auto ext = path.extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".png") {
    encode_png(img, path);
  } else {
    write_f32grid(img.grid(), path);
  }
}

}  // namespace pixdef
