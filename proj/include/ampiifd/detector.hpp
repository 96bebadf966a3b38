#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "ampiifd/scale_space.hpp"

namespace ampiifd {

struct DetectorParams {
  double response_threshold = 1e-3;
  double offset = 1.6;            // base of the scale factor mu
  double region_multiplier = 6.0; // descriptor region side = k * mu
  int max_keypoints = 5000;

  void validate() const;
};

struct KeyPoint {
  double x = 0.0;
  double y = 0.0;
  int octave = 0;
  int sublevel = 0;
  double lambda = 0.0;  // subscale offset in [-1, 1]
  double sigma = 0.0;   // sigma of the detection level
  double mu = 0.0;      // adaptive scale factor
  double response = 0.0;
  double orientation = std::numeric_limits<double>::quiet_NaN();  // [0, pi)
};

/// Integer-grid extremum before refinement.
struct Candidate {
  int x = 0;
  int y = 0;
  int level = 0;  // index into NonlinearScaleSpace::levels
  double response = 0.0;
};

struct SubpixelOffset {
  double dx = 0.0;
  double dy = 0.0;
  double dlambda = 0.0;
};

/// sigma^4 (Lxx Lyy - Lxy^2) with second derivatives from repeated central
/// differences of the level image.
Image hessian_response(const EvolutionLevel& level);

/// Strict 26-neighbour maxima above threshold, first/last levels excluded,
/// sorted by response descending and truncated to max_keypoints.
std::vector<Candidate> detect_extrema(const std::vector<Image>& responses,
                                      const DetectorParams& params);
std::vector<Candidate> detect_extrema(const NonlinearScaleSpace& space,
                                      const DetectorParams& params);

/// Quadratic refinement x = -H^-1 g over the 3x3x3 response neighbourhood.
/// Returns nullopt when the Hessian is singular (condition > 1e10) or any
/// offset component exceeds 1.
std::optional<SubpixelOffset> refine_subpixel(const Candidate& candidate,
                                              const std::vector<Image>& responses);

/// offset * 2^(o + (s + lambda) / S).
double scale_factor(int octave, int sublevel, double lambda, int num_sublevels,
                    double offset);

std::vector<KeyPoint> detect(const NonlinearScaleSpace& space,
                             const DetectorParams& params = {});

/// One keypoint per line: `x y sigma mu response o s lambda`.
void write_keypoints(const std::vector<KeyPoint>& keypoints,
                     const std::filesystem::path& path);

}  // namespace ampiifd
