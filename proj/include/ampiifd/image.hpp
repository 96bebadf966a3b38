#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace ampiifd {

/// Row-major double-precision luminance raster.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  double operator()(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  /// Clamp-to-edge read.
  double at_clamped(int x, int y) const noexcept;

  std::span<double> row(int y) noexcept {
    return {data_.data() + static_cast<std::size_t>(y) * width_,
            static_cast<std::size_t>(width_)};
  }
  std::span<const double> row(int y) const noexcept {
    return {data_.data() + static_cast<std::size_t>(y) * width_,
            static_cast<std::size_t>(width_)};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Image& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Per-pixel partial derivatives of an Image.
struct GradientField {
  Image gx;
  Image gy;

  int width() const noexcept { return gx.width(); }
  int height() const noexcept { return gx.height(); }
};

/// Interleaved RGB raster, channels in [0,1].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  double* pixel(int x, int y) noexcept {
    return data_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x);
  }
  const double* pixel(int x, int y) const noexcept {
    return data_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x);
  }
  std::span<const double> data() const noexcept { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// ---- file I/O (image_io.cpp) ----

/// Reads PNG (8/16-bit gray or RGB), binary PGM/PPM (P5/P6) or TIFF.
/// Color is reduced with Rec.601 weights; values normalized by the bit-depth
/// maximum.
Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit file; format chosen by extension (.png, .pgm, .tif/.tiff).
void save_image(const Image& img, const std::filesystem::path& path);
/// Writes an 8-bit RGB file (.png or .ppm).
void save_image(const RgbImage& img, const std::filesystem::path& path);

/// Quantizes [0,1] to a byte, rounding half up.
unsigned char to_byte(double v) noexcept;

// ---- filtering ----

/// Separable Gaussian, radius ceil(3 sigma), clamp-to-edge borders.
Image gaussian_smooth(const Image& img, double sigma);

/// Normalized discrete Gaussian taps, length 2*ceil(3 sigma)+1.
std::vector<double> gaussian_kernel(double sigma);

/// Central differences inside, one-sided differences on the border.
GradientField gradient(const Image& img);

/// Bilinear interpolation; coordinates clamp to the image frame.
double bilinear_sample(const Image& img, double x, double y);

}  // namespace ampiifd
