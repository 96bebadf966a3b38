#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "ampiifd/image.hpp"

namespace ampiifd::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(AMPIIFD_TEST_DATA) / name;
}

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ampiifd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Image random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(w, h);
  for (double& v : img.data()) v = u(rng);
  return img;
}

// Sum of anisotropic Gaussian blobs on a flat background.
struct Blob {
  double x, y, sigma_major, sigma_minor, angle, amplitude;
};

inline Image blob_image(int w, int h, std::initializer_list<Blob> blobs,
                        double background = 0.2) {
  Image img(w, h, background);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = background;
      for (const Blob& b : blobs) {
        const double c = std::cos(b.angle), s = std::sin(b.angle);
        const double u = c * (x - b.x) + s * (y - b.y);
        const double t = -s * (x - b.x) + c * (y - b.y);
        v += b.amplitude * std::exp(-0.5 * (u * u / (b.sigma_major * b.sigma_major) +
                                             t * t / (b.sigma_minor * b.sigma_minor)));
      }
      img(x, y) = v;
    }
  }
  return img;
}

// Rotation about the image centre; bilinear, border clamped.
inline Image rotate_about_center(const Image& img, double radians) {
  const double cx = (img.width() - 1) / 2.0, cy = (img.height() - 1) / 2.0;
  const double c = std::cos(radians), s = std::sin(radians);
  Image out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      // out(p) = img(R^-1 (p - c) + c)
      const double dx = x - cx, dy = y - cy;
      out(x, y) = bilinear_sample(img, c * dx + s * dy + cx, -s * dx + c * dy + cy);
    }
  }
  return out;
}

inline Image invert(const Image& img) {
  Image out = img;
  for (double& v : out.data()) v = 1.0 - v;
  return out;
}

inline Image crop(const Image& img, int x0, int y0, int w, int h) {
  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = img(x0 + x, y0 + y);
  return out;
}

}  // namespace ampiifd::testing
