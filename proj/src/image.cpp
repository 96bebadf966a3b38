#include <algorithm>
#include <cmath>
#include <string>

#include "ampiifd/error.hpp"
#include "ampiifd/image.hpp"
#include "ampiifd/simd.hpp"

namespace ampiifd {

Image::Image(int width, int height, double fill)
    : width_(width), height_(height) {
  require(width >= 0 && height >= 0, "image dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  require(width >= 0 && height >= 0, "image dimensions must be non-negative");
  require(data_.size() == static_cast<std::size_t>(width) * height,
          "image data length must equal width * height");
}

double Image::at_clamped(int x, int y) const noexcept {
  return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
}

RgbImage::RgbImage(int width, int height)
    : width_(width),
      height_(height),
      data_(3 * static_cast<std::size_t>(width) * height, 0.0) {}

std::vector<double> gaussian_kernel(double sigma) {
  require(std::isfinite(sigma) && sigma >= 0.0,
          "gaussian sigma must be finite and non-negative");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  if (radius == 0) {
    taps[0] = 1.0;
    return taps;
  }
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    taps[i + radius] = w;
    sum += w;
  }
  for (double& t : taps) t /= sum;
  return taps;
}

Image gaussian_smooth(const Image& img, double sigma) {
  const auto taps = gaussian_kernel(sigma);
  if (sigma == 0.0 || img.empty()) return img;
  const int radius = static_cast<int>(taps.size() / 2);
  const auto& k = simd::kernels();
  Image tmp(img.width(), img.height());
  Image out(img.width(), img.height());
  k.convolve_rows(img.data().data(), tmp.data().data(), img.width(),
                  img.height(), taps.data(), radius);
  k.convolve_cols(tmp.data().data(), out.data().data(), img.width(),
                  img.height(), taps.data(), radius);
  return out;
}

GradientField gradient(const Image& img) {
  require(img.width() >= 3 && img.height() >= 3,
          "gradient requires an image of at least 3x3");
  const int w = img.width();
  const int h = img.height();
  GradientField g{Image(w, h), Image(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x == 0) {
        g.gx(x, y) = img(1, y) - img(0, y);
      } else if (x == w - 1) {
        g.gx(x, y) = img(w - 1, y) - img(w - 2, y);
      } else {
        g.gx(x, y) = (img(x + 1, y) - img(x - 1, y)) * 0.5;
      }
      if (y == 0) {
        g.gy(x, y) = img(x, 1) - img(x, 0);
      } else if (y == h - 1) {
        g.gy(x, y) = img(x, h - 1) - img(x, h - 2);
      } else {
        g.gy(x, y) = (img(x, y + 1) - img(x, y - 1)) * 0.5;
      }
    }
  }
  return g;
}

double bilinear_sample(const Image& img, double x, double y) {
  require(std::isfinite(x) && std::isfinite(y),
          "bilinear_sample requires finite coordinates");
  x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img(x0, y0) + fx * (img(x1, y0) - img(x0, y0));
  const double bottom = img(x0, y1) + fx * (img(x1, y1) - img(x0, y1));
  return top + fy * (bottom - top);
}

}  // namespace ampiifd
