#include <doctest.h>

#include <fstream>

#include "pixdef/error.h"
#include "pixdef/image.h"
#include "pixdef/image_io.h"
#include "test_util.h"

using namespace pixdef;
using namespace pixdef::testing;

TEST_CASE("image rejects out-of-range intensities") {
  CHECK_THROWS_AS(Image::from_values(1, 2, 1, {0.5, 1.5}), Error);
  CHECK_THROWS_AS(Image::from_values(1, 2, 1, {0.5, -0.1}), Error);
  CHECK_THROWS_AS(Image::from_values(1, 2, 1, {0.5}), Error);
  CHECK_THROWS_AS(Image(2, 2, 2), Error);
  const Image c = Image::clamped(Grid(1, 3, 1, {-1.0, 0.25, 2.0}));
  CHECK(c(0, 0) == 0.0);
  CHECK(c(0, 1) == 0.25);
  CHECK(c(0, 2) == 1.0);
}

TEST_CASE("png byte scaling") {
  const auto dir = temp_dir("png_scale");
  const auto path = dir / "px.png";
  save_image(Image::from_values(1, 3, 1, {1.0, 0.0, 128.0 / 255.0}), path);
  const Image back = load_image(path);
  CHECK(back(0, 0) == 1.0);
  CHECK(back(0, 1) == 0.0);
  CHECK(back(0, 2) == doctest::Approx(0.5019607843137255).epsilon(1e-15));
  CHECK(back(0, 2) == 128.0 / 255.0);
}

TEST_CASE("8-bit export rounds half up") {
  CHECK(quantize_to_byte(1.0) == 255);
  CHECK(quantize_to_byte(0.0) == 0);
  CHECK(quantize_to_byte(0.5) == 128);  // 127.5 -> 128
  CHECK(quantize_to_byte(127.4 / 255.0) == 127);
}

TEST_CASE("png round trip is lossless on the 1/255 lattice") {
  const auto dir = temp_dir("png_rt");
  for (std::size_t c : {1u, 3u}) {
    const Image img = random_quantized_image(17, 23, c, 42 + c);
    const auto path = dir / ("rt" + std::to_string(c) + ".png");
    save_image(img, path);
    const Image back = load_image(path);
    CHECK(back == img);
    save_image(back, path);
    CHECK(load_image(path) == img);
  }
}

TEST_CASE("f32grid round trip and validation") {
  const auto dir = temp_dir("f32");
  Grid g(3, 4, 2);
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] = static_cast<double>(i) * 0.25 - 1.0;
  write_f32grid(g, dir / "g.f32g");
  CHECK(read_f32grid(dir / "g.f32g") == g);

  // Byte layout: magic then little-endian u32 dims.
  std::ifstream in(dir / "g.f32g", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  REQUIRE(bytes.size() == 16 + 4 * 24);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "F32G");
  CHECK(bytes[4] == 3);
  CHECK(bytes[8] == 4);
  CHECK(bytes[12] == 2);

  // Out-of-range values cannot be loaded as an image.
  CHECK_THROWS_AS(load_image(dir / "g.f32g"), Error);

  std::ofstream(dir / "bad.f32g", std::ios::binary) << "F32Gxxxx";
  CHECK_THROWS_AS(read_f32grid(dir / "bad.f32g"), Error);
  CHECK_THROWS_AS(load_image(dir / "missing.png"), Error);
}

TEST_CASE("f32grid rejects oversized headers") {
  const auto dir = temp_dir("f32_big");
  std::ofstream out(dir / "big.f32g", std::ios::binary);
  const unsigned char header[16] = {'F', '3', '2', 'G', 0, 0, 1, 0, 0, 0, 1, 0, 3, 0, 0, 0};
  out.write(reinterpret_cast<const char*>(header), 16);
  out.close();
  CHECK_THROWS_WITH_AS(read_f32grid(dir / "big.f32g"), doctest::Contains("overflow"), Error);
}

TEST_CASE("16-bit png is rejected") {
  // Minimal 1x1 16-bit greyscale PNG.
  const unsigned char png16[] = {
      0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48,
      0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x10, 0x00, 0x00, 0x00,
      0x00, 0x6a, 0xee, 0x47, 0x16, 0x00, 0x00, 0x00, 0x0b, 0x49, 0x44, 0x41, 0x54, 0x78,
      0x9c, 0x63, 0x10, 0x32, 0x01, 0x00, 0x00, 0x5b, 0x00, 0x47, 0x96, 0xfb, 0x1b, 0x65,
      0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
  const auto dir = temp_dir("png16");
  std::ofstream(dir / "p16.png", std::ios::binary)
      .write(reinterpret_cast<const char*>(png16), sizeof(png16));
  CHECK_THROWS_WITH_AS(load_image(dir / "p16.png"), doctest::Contains("bit depth"), Error);
}

TEST_CASE("ycbcr endpoints") {
  const auto convert = [](double r, double g, double b) {
    return rgb_to_ycbcr(Image::from_values(1, 1, 3, {r, g, b}));
  };
  const Image black = convert(0, 0, 0);
  CHECK(black(0, 0, 0) == 0.0);
  CHECK(black(0, 0, 1) == doctest::Approx(0.5));
  CHECK(black(0, 0, 2) == doctest::Approx(0.5));
  const Image white = convert(1, 1, 1);
  CHECK(white(0, 0, 0) == doctest::Approx(1.0));
  CHECK(white(0, 0, 1) == doctest::Approx(0.5));
  CHECK(white(0, 0, 2) == doctest::Approx(0.5));
  const Image red = convert(1, 0, 0);
  CHECK(red(0, 0, 0) == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(red(0, 0, 1) == doctest::Approx(0.41563205417607224).epsilon(1e-12));
  CHECK(red(0, 0, 2) == doctest::Approx(0.75).epsilon(1e-12));

  const Image gray = ycbcr_to_rgb(Image::from_values(1, 1, 3, {0.5, 0.5, 0.5}));
  for (std::size_t c = 0; c < 3; ++c) CHECK(gray(0, 0, c) == doctest::Approx(0.5));

  const Image back = ycbcr_to_rgb(red);
  CHECK(std::abs(back(0, 0, 0) - 1.0) < 1e-6);
  CHECK(std::abs(back(0, 0, 1)) < 1e-6);
  CHECK(std::abs(back(0, 0, 2)) < 1e-6);

  CHECK_THROWS_AS(rgb_to_ycbcr(Image(2, 2, 1)), Error);
  CHECK_THROWS_AS(ycbcr_to_rgb(Image(2, 2, 1)), Error);
}

TEST_CASE("ycbcr round trip on random in-gamut images") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Image img = random_image(16, 16, 3, seed);
    const Image back = ycbcr_to_rgb(rgb_to_ycbcr(img));
    double err = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      err = std::max(err, std::abs(img.values()[i] - back.values()[i]));
    }
    CHECK(err < 1e-6);
  }
}

TEST_CASE("normalized rmse") {
  const Image a(4, 4, 3, 0.0);
  CHECK(normalized_rmse(a, a) == 0.0);
  CHECK(normalized_rmse(a, Image(4, 4, 3, 1.0)) == doctest::Approx(1.0));
  CHECK(normalized_rmse(a, Image(4, 4, 3, 0.04)) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK_THROWS_AS(normalized_rmse(a, Image(4, 5, 3)), Error);
}

TEST_CASE("normalized rmse is a metric on random triples") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Image a = random_image(5, 7, 3, seed * 3);
    const Image b = random_image(5, 7, 3, seed * 3 + 1);
    const Image c = random_image(5, 7, 3, seed * 3 + 2);
    const double ab = normalized_rmse(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab == normalized_rmse(b, a));
    CHECK(ab > 0.0);
    CHECK(normalized_rmse(a, c) <= ab + normalized_rmse(b, c) + 1e-9);
  }
}
