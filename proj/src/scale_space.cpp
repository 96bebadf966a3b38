#include "ampiifd/scale_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ampiifd/error.hpp"
#include "ampiifd/simd.hpp"

namespace ampiifd {
namespace {

constexpr double kFlatGradient = 1e-9;

Image transpose(const Image& img) {
  Image t(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) t(y, x) = img(x, y);
  }
  return t;
}

void config_check(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Config, what);
}

}  // namespace

void ScaleSpaceParams::validate() const {
  config_check(num_octaves >= 1, "num_octaves: O >= 1 violated");
  config_check(num_sublevels >= 1, "num_sublevels: S >= 1 violated");
  config_check(std::isfinite(base_sigma) && base_sigma > 0.0,
               "base_sigma: sigma0 > 0 violated");
  config_check(contrast_percentile > 0.0 && contrast_percentile < 1.0,
               "contrast_percentile: 0 < p < 1 violated");
  config_check(std::isfinite(gradient_sigma) && gradient_sigma >= 0.0,
               "gradient_sigma: must be >= 0");
  config_check(aos_substeps >= 1, "aos_substeps: must be >= 1");
}

const EvolutionLevel& NonlinearScaleSpace::level(int octave, int sublevel) const {
  require(octave >= 0 && octave < params.num_octaves && sublevel >= 0 &&
              sublevel < params.num_sublevels,
          "scale-space level index out of range");
  return levels.at(static_cast<std::size_t>(octave) * params.num_sublevels +
                   sublevel);
}

double sigma_of_level(int octave, int sublevel, const ScaleSpaceParams& params) {
  require(octave >= 0 && octave < params.num_octaves,
          "sigma_of_level: octave index out of range");
  require(sublevel >= 0 && sublevel < params.num_sublevels,
          "sigma_of_level: sublevel index out of range");
  return params.base_sigma *
         std::exp2(octave + static_cast<double>(sublevel) / params.num_sublevels);
}

double time_of_sigma(double sigma) {
  require(sigma >= 0.0, "time_of_sigma: sigma must be non-negative");
  return sigma * sigma / 2.0;
}

double estimate_contrast_factor(const Image& img, const ScaleSpaceParams& params) {
  require(img.width() >= 3 && img.height() >= 3,
          "estimate_contrast_factor requires an image of at least 3x3");
  const GradientField g = gradient(gaussian_smooth(img, params.gradient_sigma));
  std::vector<double> all;
  all.reserve(static_cast<std::size_t>(img.width() - 2) * (img.height() - 2));
  double max_mag = 0.0;
  for (int y = 1; y < img.height() - 1; ++y) {
    for (int x = 1; x < img.width() - 1; ++x) {
      const double m = std::hypot(g.gx(x, y), g.gy(x, y));
      all.push_back(m);
      max_mag = std::max(max_mag, m);
    }
  }
  // Rounding residue in flat areas counts as zero.
  std::vector<double> mags;
  mags.reserve(all.size());
  for (double m : all)
    if (m > kFlatGradient * max_mag) mags.push_back(m);
  if (mags.empty()) return kContrastFallback;

  std::vector<std::size_t> hist(kContrastBins, 0);
  for (double m : mags) {
    const int bin = static_cast<int>(std::ceil(m / max_mag * kContrastBins)) - 1;
    ++hist[std::clamp(bin, 0, kContrastBins - 1)];
  }
  const double target = params.contrast_percentile * static_cast<double>(mags.size());
  std::size_t cumulative = 0;
  int bin = 0;
  for (; bin < kContrastBins; ++bin) {
    cumulative += hist[bin];
    if (static_cast<double>(cumulative) >= target) break;
  }
  bin = std::min(bin, kContrastBins - 1);
  return max_mag * (bin + 1) / kContrastBins;
}

double conductivity_g3(double grad_mag, double k) {
  require(k > 0.0, "conductivity_g3: contrast factor must be positive");
  require(grad_mag >= 0.0, "conductivity_g3: gradient magnitude must be >= 0");
  if (grad_mag == 0.0) return 1.0;
  const double r = grad_mag / k;
  const double r2 = r * r;
  const double r4 = r2 * r2;
  return 1.0 - std::exp(-3.315 / (r4 * r4));
}

Image conductivity_image(const GradientField& grad, double k) {
  Image c(grad.width(), grad.height());
  auto gx = grad.gx.data();
  auto gy = grad.gy.data();
  auto out = c.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = conductivity_g3(std::hypot(gx[i], gy[i]), k);
  }
  return c;
}

Image aos_step(const Image& image, const Image& conductivity, double tau) {
  require(image.same_shape(conductivity),
          "aos_step: conductivity dimensions must match the image");
  require(std::isfinite(tau) && tau >= 0.0, "aos_step: tau must be >= 0");
  if (tau == 0.0 || image.empty()) return image;
  const auto& k = simd::kernels();
  const int w = image.width();
  const int h = image.height();

  // Vertical systems solve directly; horizontal ones on the transpose.
  Image vertical(w, h);
  k.tridiagonal_columns(conductivity.data().data(), image.data().data(),
                        vertical.data().data(), w, h, tau);

  const Image ct = transpose(conductivity);
  const Image lt = transpose(image);
  Image horizontal_t(h, w);
  k.tridiagonal_columns(ct.data().data(), lt.data().data(),
                        horizontal_t.data().data(), h, w, tau);

  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(x, y) = 0.5 * (vertical(x, y) + horizontal_t(y, x));
    }
  }
  return out;
}

NonlinearScaleSpace build_scale_space(const Image& img,
                                      const ScaleSpaceParams& params) {
  params.validate();
  require(img.width() >= 3 && img.height() >= 3,
          "build_scale_space requires an image of at least 3x3");
  NonlinearScaleSpace space;
  space.params = params;
  space.contrast_factor = estimate_contrast_factor(img, params);

  const int total = params.num_octaves * params.num_sublevels;
  space.levels.reserve(total);
  Image current = gaussian_smooth(img, params.base_sigma);
  double previous_time = 0.0;
  for (int i = 0; i < total; ++i) {
    EvolutionLevel level;
    level.octave = i / params.num_sublevels;
    level.sublevel = i % params.num_sublevels;
    level.sigma = sigma_of_level(level.octave, level.sublevel, params);
    level.time = time_of_sigma(level.sigma);
    if (i > 0) {
      const double tau = (level.time - previous_time) / params.aos_substeps;
      for (int step = 0; step < params.aos_substeps; ++step) {
        const GradientField g =
            gradient(gaussian_smooth(current, params.gradient_sigma));
        current = aos_step(current, conductivity_image(g, space.contrast_factor), tau);
      }
    }
    previous_time = level.time;
    level.image = current;
    level.grad = gradient(current);
    space.levels.push_back(std::move(level));
  }
  return space;
}

void dump_levels(const NonlinearScaleSpace& space, const std::filesystem::path& dir) {
  for (const auto& level : space.levels) {
    save_image(level.image, dir / ("level_" + std::to_string(level.octave) + "_" +
                                   std::to_string(level.sublevel) + ".png"));
  }
}

}  // namespace ampiifd
