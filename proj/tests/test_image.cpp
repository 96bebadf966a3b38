#include <gtest/gtest.h>

#include <cmath>

#include "ampiifd/error.hpp"
#include "ampiifd/image.hpp"
#include "test_util.hpp"

namespace ampiifd {
namespace {

using testing::random_image;
using testing::scratch_dir;
using testing::write_bytes;

TEST(LoadImage, Pgm8BitNormalizesEndpoints) {
  const auto dir = scratch_dir("pgm8");
  write_bytes(dir / "a.pgm", std::string("P5\n2 2\n255\n") + '\x00' + '\xff' + '\x00' + '\xff');
  const Image img = load_image(dir / "a.pgm");
  ASSERT_EQ(img.width(), 2);
  ASSERT_EQ(img.height(), 2);
  EXPECT_EQ(img(0, 0), 0.0);
  EXPECT_EQ(img(1, 0), 1.0);
  EXPECT_EQ(img(0, 1), 0.0);
  EXPECT_EQ(img(1, 1), 1.0);
}

TEST(LoadImage, Pgm16BitUsesBitDepthMaximum) {
  const auto dir = scratch_dir("pgm16");
  std::string bytes = "P5\n2 1\n65535\n";
  bytes += std::string{'\x80', '\x00', '\xff', '\xff'};
  write_bytes(dir / "a.pgm", bytes);
  const Image img = load_image(dir / "a.pgm");
  EXPECT_DOUBLE_EQ(img(0, 0), 32768.0 / 65535.0);
  EXPECT_EQ(img(1, 0), 1.0);
}

TEST(LoadImage, RgbRedPixelLuminance) {
  const auto dir = scratch_dir("ppm");
  write_bytes(dir / "r.ppm", std::string("P6\n1 1\n255\n") + '\xff' + '\x00' + '\x00');
  EXPECT_NEAR(load_image(dir / "r.ppm")(0, 0), 0.299, 1e-12);

  RgbImage rgb(1, 1);
  rgb.pixel(0, 0)[0] = 1.0;
  save_image(rgb, dir / "r.png");
  EXPECT_NEAR(load_image(dir / "r.png")(0, 0), 0.299, 1e-12);
}

TEST(LoadImage, Errors) {
  const auto dir = scratch_dir("load_errors");
  try {
    load_image(dir / "missing.png");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Input);
    EXPECT_NE(std::string(e.what()).find("unreadable file"), std::string::npos);
  }
  write_bytes(dir / "junk.bin", "this is not an image");
  try {
    load_image(dir / "junk.bin");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported format"), std::string::npos);
  }
  write_bytes(dir / "empty.pgm", "P5\n0 3\n255\n");
  try {
    load_image(dir / "empty.pgm");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("zero-dimension image"), std::string::npos);
  }
}

TEST(SaveImage, HalfRoundsUp) {
  EXPECT_EQ(to_byte(0.5), 128);
  EXPECT_EQ(to_byte(0.0), 0);
  EXPECT_EQ(to_byte(1.0), 255);
  EXPECT_EQ(to_byte(-0.3), 0);
  EXPECT_EQ(to_byte(1.7), 255);
}

class RoundTrip : public ::testing::TestWithParam<const char*> {};

TEST_P(RoundTrip, QuantizedDataSurvives) {
  const auto dir = scratch_dir(std::string("roundtrip") + (GetParam() + 1));
  Image img = random_image(13, 7, 3);
  for (double& v : img.data()) v = to_byte(v) / 255.0;
  const auto path = dir / (std::string("img") + GetParam());
  save_image(img, path);
  EXPECT_EQ(load_image(path), img);
}

INSTANTIATE_TEST_SUITE_P(Formats, RoundTrip, ::testing::Values(".png", ".pgm", ".tif"));

TEST(SaveImage, NonexistentDirectoryFails) {
  const auto dir = scratch_dir("save_errors");
  EXPECT_THROW(save_image(Image(2, 2, 0.5), dir / "nope" / "a.png"), Error);
}

TEST(LoadImage, BundledCameraImage) {
  const Image img = load_image(testing::data_path("camera.png"));
  EXPECT_EQ(img.width(), 512);
  EXPECT_EQ(img.height(), 512);
  for (double v : img.data()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(GaussianSmooth, ZeroSigmaIsIdentity) {
  const Image img = random_image(9, 6, 1);
  EXPECT_EQ(gaussian_smooth(img, 0.0), img);
}

TEST(GaussianSmooth, ConstantPreserved) {
  const Image out = gaussian_smooth(Image(11, 8, 0.5), 2.0);
  for (double v : out.data()) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(GaussianSmooth, ImpulseMatchesDenseConvolution) {
  Image impulse(7, 1, 0.0);
  impulse(3, 0) = 1.0;
  // Dense oracle: radius 3, weights exp(-i^2/2) normalized.
  double sum = 0.0;
  for (int i = -3; i <= 3; ++i) sum += std::exp(-0.5 * i * i);
  const Image out = gaussian_smooth(impulse, 1.0);
  EXPECT_NEAR(out(3, 0), 1.0 / sum, 1e-15);
  EXPECT_NEAR(out(3, 0), 0.3990502796524549, 1e-15);
}

TEST(GaussianSmooth, Errors) {
  EXPECT_THROW(gaussian_smooth(Image(3, 3), -1.0), Error);
  EXPECT_THROW(gaussian_smooth(Image(3, 3), std::nan("")), Error);
}

TEST(GaussianSmooth, MeanPreservedWithConstantBorder) {
  Image img(40, 40, 0.25);
  const Image noise = random_image(20, 20, 9);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) img(x + 10, y + 10) = noise(x, y);
  const Image out = gaussian_smooth(img, 1.5);
  double a = 0.0, b = 0.0;
  for (double v : img.data()) a += v;
  for (double v : out.data()) b += v;
  EXPECT_NEAR(a / img.size(), b / out.size(), 1e-6);
}

TEST(Gradient, ConstantIsZero) {
  const GradientField g = gradient(Image(5, 4, 0.7));
  for (double v : g.gx.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.gy.data()) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, Ramp) {
  const int w = 9;
  Image img(w, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = static_cast<double>(x) / (w - 1);
  const GradientField g = gradient(img);
  for (int y = 1; y < 4; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      EXPECT_NEAR(g.gx(x, y), 1.0 / (w - 1), 1e-15);
      EXPECT_EQ(g.gy(x, y), 0.0);
    }
  }
}

TEST(Gradient, MatchesLoopOracle) {
  const Image img = random_image(5, 5, 17);
  const GradientField g = gradient(img);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, 4);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, 4);
      EXPECT_EQ(g.gx(x, y), (img(xr, y) - img(xl, y)) / (xr - xl));
      EXPECT_EQ(g.gy(x, y), (img(x, yd) - img(x, yu)) / (yd - yu));
    }
  }
}

TEST(Gradient, Linear) {
  const Image a = random_image(8, 6, 4), b = random_image(8, 6, 5);
  Image c(8, 6);
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = 2.0 * a.data()[i] - 0.5 * b.data()[i];
  const GradientField ga = gradient(a), gb = gradient(b), gc = gradient(c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(gc.gx.data()[i], 2.0 * ga.gx.data()[i] - 0.5 * gb.gx.data()[i], 1e-14);
    EXPECT_NEAR(gc.gy.data()[i], 2.0 * ga.gy.data()[i] - 0.5 * gb.gy.data()[i], 1e-14);
  }
}

TEST(Gradient, TooSmall) { EXPECT_THROW(gradient(Image(2, 5)), Error); }

TEST(Bilinear, IntegerCoordinatesIndexDirectly) {
  const Image img = random_image(6, 5, 2);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) EXPECT_EQ(bilinear_sample(img, x, y), img(x, y));
}

TEST(Bilinear, MidpointAndClamp) {
  const Image img(2, 2, std::vector<double>{0.0, 1.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(bilinear_sample(img, 0.5, 0.5), 0.5);
  EXPECT_EQ(bilinear_sample(img, -5.0, 0.0), img(0, 0));
  EXPECT_EQ(bilinear_sample(img, 9.0, 1.0), img(1, 1));
  EXPECT_THROW(bilinear_sample(img, std::nan(""), 0.0), Error);
}

}  // namespace
}  // namespace ampiifd
