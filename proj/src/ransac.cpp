#include <cmath>
#include <limits>
#include <random>

#include "ampiifd/error.hpp"
#include "ampiifd/matching.hpp"

namespace ampiifd {
namespace {

double residual(const TransformModel& model, const PointPair& p) {
  try {
    const Point2 q = apply(model, p.from);
    return std::hypot(q.x - p.to.x, q.y - p.to.y);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

PairRansacResult ransac_pairs(std::span<const PointPair> pairs, ModelKind kind,
                              const MatchParams& params) {
  params.validate();
  const std::size_t m = static_cast<std::size_t>(minimal_sample_size(kind));
  if (pairs.size() < m) fail(ErrorKind::Degenerate, "too few matches");

  std::mt19937_64 rng(params.ransac_seed);
  std::vector<std::size_t> sample(m);
  std::vector<PointPair> minimal(m);
  std::vector<std::size_t> best_inliers;
  double best_error = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> inliers;
  inliers.reserve(pairs.size());

  for (int round = 0; round < params.ransac_iterations; ++round) {
    // Distinct indices by rejection; modulo keeps the sequence portable.
    for (std::size_t k = 0; k < m; ++k) {
      for (;;) {
        const std::size_t idx = static_cast<std::size_t>(rng() % pairs.size());
        bool fresh = true;
        for (std::size_t t = 0; t < k; ++t) fresh = fresh && sample[t] != idx;
        if (fresh) {
          sample[k] = idx;
          break;
        }
      }
      minimal[k] = pairs[sample[k]];
    }
    TransformModel model;
    try {
      model = estimate(kind, minimal);
    } catch (const Error&) {
      continue;
    }
    inliers.clear();
    double error_sum = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double r = residual(model, pairs[i]);
      if (r < params.ransac_threshold) {
        inliers.push_back(i);
        error_sum += r;
      }
    }
    if (inliers.empty()) continue;
    const double mean_error = error_sum / static_cast<double>(inliers.size());
    if (inliers.size() > best_inliers.size() ||
        (inliers.size() == best_inliers.size() && mean_error < best_error)) {
      best_inliers = inliers;
      best_error = mean_error;
    }
  }
  if (best_inliers.size() < m) {
    fail(ErrorKind::NoModel, "no model with sufficient inliers");
  }
  std::vector<PointPair> consensus;
  consensus.reserve(best_inliers.size());
  for (std::size_t i : best_inliers) consensus.push_back(pairs[i]);
  TransformModel refit;
  try {
    refit = estimate(kind, consensus);
  } catch (const Error& e) {
    fail(ErrorKind::NoModel, std::string("no model with sufficient inliers: ") + e.what());
  }
  return {std::move(best_inliers), refit};
}

RansacResult ransac(std::span<const MatchPair> matches,
                    std::span<const KeyPoint> ref_keypoints,
                    std::span<const KeyPoint> sen_keypoints, ModelKind kind,
                    const MatchParams& params) {
  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const auto& match : matches) {
    const KeyPoint& r = ref_keypoints[match.ref_index];
    const KeyPoint& s = sen_keypoints[match.sen_index];
    pairs.push_back({{s.x, s.y}, {r.x, r.y}});
  }
  PairRansacResult fit = ransac_pairs(pairs, kind, params);
  RansacResult out{{}, fit.model};
  out.inliers.reserve(fit.inliers.size());
  for (std::size_t i : fit.inliers) out.inliers.push_back(matches[i]);
  return out;
}

}  // namespace ampiifd
