#pragma once

#include <filesystem>
#include <vector>

#include "ampiifd/image.hpp"

namespace ampiifd {

struct ScaleSpaceParams {
  int num_octaves = 4;
  int num_sublevels = 4;
  double base_sigma = 1.6;
  double contrast_percentile = 0.98;
  double gradient_sigma = 1.0;  // smoothing before the conductivity gradient
  int aos_substeps = 1;         // AOS steps per level transition

  /// Throws Error(Config) naming the offending field.
  void validate() const;
};

/// One diffusion-filtered image of the nonlinear scale space.
struct EvolutionLevel {
  int octave = 0;
  int sublevel = 0;
  double sigma = 0.0;
  double time = 0.0;  // sigma^2 / 2
  Image image;
  GradientField grad;
};

struct NonlinearScaleSpace {
  ScaleSpaceParams params;
  std::vector<EvolutionLevel> levels;
  double contrast_factor = 0.0;

  /// Level for (octave, sublevel); throws if out of range.
  const EvolutionLevel& level(int octave, int sublevel) const;
  int width() const { return levels.front().image.width(); }
  int height() const { return levels.front().image.height(); }
};

/// sigma0 * 2^(o + s/S).
double sigma_of_level(int octave, int sublevel, const ScaleSpaceParams& params);

/// sigma^2 / 2.
double time_of_sigma(double sigma);

/// Gradient-magnitude percentile over interior pixels of the smoothed image,
/// read from a 256-bin histogram over (0, max]. Returns 0.01 when every
/// interior gradient vanishes.
double estimate_contrast_factor(const Image& img, const ScaleSpaceParams& params);

inline constexpr double kContrastFallback = 0.01;
inline constexpr int kContrastBins = 256;

/// Weickert diffusivity: 1 at zero gradient, else 1 - exp(-3.315 / (|g|/k)^8).
double conductivity_g3(double grad_mag, double k);

/// Per-pixel g3 of the gradient magnitude of `smoothed`.
Image conductivity_image(const GradientField& grad, double k);

/// One semi-implicit AOS step: 1/2 sum over axes of (I - 2 tau A_l)^-1 L.
Image aos_step(const Image& image, const Image& conductivity, double tau);

NonlinearScaleSpace build_scale_space(const Image& img,
                                      const ScaleSpaceParams& params = {});

/// Writes level_{o}_{s}.png for every level into `dir`.
void dump_levels(const NonlinearScaleSpace& space, const std::filesystem::path& dir);

}  // namespace ampiifd
