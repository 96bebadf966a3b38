#include "ampiifd/detector.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ampiifd/error.hpp"

namespace ampiifd {
namespace {

constexpr double kMaxCondition = 1e10;

bool is_strict_maximum(const std::vector<Image>& responses, int level, int x,
                       int y) {
  const double v = responses[level](x, y);
  for (int l = level - 1; l <= level + 1; ++l) {
    const Image& r = responses[l];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (l == level && dx == 0 && dy == 0) continue;
        if (!(v > r(x + dx, y + dy))) return false;
      }
    }
  }
  return true;
}

}  // namespace

void DetectorParams::validate() const {
  if (!(response_threshold > 0.0)) {
    fail(ErrorKind::Config, "response_threshold: must be > 0");
  }
  if (!(offset > 0.0)) fail(ErrorKind::Config, "offset: must be > 0");
  if (!(region_multiplier >= 1.0)) {
    fail(ErrorKind::Config, "region_multiplier: k >= 1 violated");
  }
  if (max_keypoints < 1) fail(ErrorKind::Config, "max_keypoints: must be >= 1");
}

Image hessian_response(const EvolutionLevel& level) {
  const Image& img = level.image;
  require(img.width() >= 5 && img.height() >= 5,
          "hessian_response requires a level image of at least 5x5");
  const GradientField& g = level.grad.gx.empty() ? gradient(img) : level.grad;
  const GradientField dgx = gradient(g.gx);
  const GradientField dgy = gradient(g.gy);
  const double s2 = level.sigma * level.sigma;
  const double norm = s2 * s2;
  Image response(img.width(), img.height());
  auto lxx = dgx.gx.data();
  auto lxy = dgx.gy.data();
  auto lyy = dgy.gy.data();
  auto out = response.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = norm * (lxx[i] * lyy[i] - lxy[i] * lxy[i]);
  }
  return response;
}

std::vector<Candidate> detect_extrema(const std::vector<Image>& responses,
                                      const DetectorParams& params) {
  std::vector<Candidate> out;
  if (responses.size() < 3) return out;
  const int w = responses.front().width();
  const int h = responses.front().height();
  for (int level = 1; level + 1 < static_cast<int>(responses.size()); ++level) {
    const Image& r = responses[level];
    for (int y = 1; y < h - 1; ++y) {
      for (int x = 1; x < w - 1; ++x) {
        if (r(x, y) > params.response_threshold &&
            is_strict_maximum(responses, level, x, y)) {
          out.push_back({x, y, level, r(x, y)});
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.level != b.level) return a.level < b.level;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  if (out.size() > static_cast<std::size_t>(params.max_keypoints)) {
    out.resize(params.max_keypoints);
  }
  return out;
}

std::vector<Candidate> detect_extrema(const NonlinearScaleSpace& space,
                                      const DetectorParams& params) {
  std::vector<Image> responses;
  responses.reserve(space.levels.size());
  for (const auto& level : space.levels) responses.push_back(hessian_response(level));
  return detect_extrema(responses, params);
}

std::optional<SubpixelOffset> refine_subpixel(const Candidate& c,
                                              const std::vector<Image>& responses) {
  require(c.level >= 1 && c.level + 1 < static_cast<int>(responses.size()),
          "refine_subpixel: candidate level must be interior");
  const Image& r0 = responses[c.level];
  require(c.x >= 1 && c.y >= 1 && c.x + 1 < r0.width() && c.y + 1 < r0.height(),
          "refine_subpixel: candidate must be spatially interior");
  const auto R = [&](int dx, int dy, int dl) {
    return responses[c.level + dl](c.x + dx, c.y + dy);
  };
  const double v = R(0, 0, 0);
  const Eigen::Vector3d g((R(1, 0, 0) - R(-1, 0, 0)) * 0.5,
                          (R(0, 1, 0) - R(0, -1, 0)) * 0.5,
                          (R(0, 0, 1) - R(0, 0, -1)) * 0.5);
  Eigen::Matrix3d H;
  H(0, 0) = R(1, 0, 0) + R(-1, 0, 0) - 2.0 * v;
  H(1, 1) = R(0, 1, 0) + R(0, -1, 0) - 2.0 * v;
  H(2, 2) = R(0, 0, 1) + R(0, 0, -1) - 2.0 * v;
  H(0, 1) = H(1, 0) = (R(1, 1, 0) - R(1, -1, 0) - R(-1, 1, 0) + R(-1, -1, 0)) * 0.25;
  H(0, 2) = H(2, 0) = (R(1, 0, 1) - R(1, 0, -1) - R(-1, 0, 1) + R(-1, 0, -1)) * 0.25;
  H(1, 2) = H(2, 1) = (R(0, 1, 1) - R(0, 1, -1) - R(0, -1, 1) + R(0, -1, -1)) * 0.25;

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(2) > 0.0) || sv(0) / sv(2) > kMaxCondition) return std::nullopt;
  const Eigen::Vector3d offset = -svd.solve(g);
  if (!offset.allFinite() || offset.cwiseAbs().maxCoeff() > 1.0) return std::nullopt;
  return SubpixelOffset{offset(0), offset(1), offset(2)};
}

double scale_factor(int octave, int sublevel, double lambda, int num_sublevels,
                    double offset) {
  require(lambda >= -1.0 && lambda <= 1.0, "scale_factor: lambda must lie in [-1, 1]");
  require(num_sublevels >= 1, "scale_factor: S must be >= 1");
  return offset * std::exp2(octave + (sublevel + lambda) / num_sublevels);
}

std::vector<KeyPoint> detect(const NonlinearScaleSpace& space,
                             const DetectorParams& params) {
  params.validate();
  std::vector<Image> responses;
  responses.reserve(space.levels.size());
  for (const auto& level : space.levels) responses.push_back(hessian_response(level));
  const auto candidates = detect_extrema(responses, params);

  std::vector<KeyPoint> keypoints;
  keypoints.reserve(candidates.size());
  const int w = space.width();
  const int h = space.height();
  for (const auto& c : candidates) {
    const auto refined = refine_subpixel(c, responses);
    if (!refined) continue;
    const EvolutionLevel& level = space.levels[c.level];
    KeyPoint kp;
    kp.x = c.x + refined->dx;
    kp.y = c.y + refined->dy;
    if (kp.x < 0.0 || kp.y < 0.0 || kp.x >= w || kp.y >= h) continue;
    kp.octave = level.octave;
    kp.sublevel = level.sublevel;
    kp.lambda = refined->dlambda;
    kp.sigma = level.sigma;
    kp.mu = scale_factor(kp.octave, kp.sublevel, kp.lambda,
                         space.params.num_sublevels, params.offset);
    kp.response = c.response;
    keypoints.push_back(kp);
  }
  return keypoints;
}

void write_keypoints(const std::vector<KeyPoint>& keypoints,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Input, "unwritable path: " + path.string());
  char line[256];
  for (const auto& kp : keypoints) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g %.17g %.17g %d %d %.17g\n",
                  kp.x, kp.y, kp.sigma, kp.mu, kp.response, kp.octave,
                  kp.sublevel, kp.lambda);
    out << line;
  }
}

}  // namespace ampiifd
