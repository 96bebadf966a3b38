#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ampiifd/transform.hpp"

namespace ampiifd {

/// (x_ref, y_ref, x_sen, y_sen).
struct ControlPoint {
  Point2 ref;
  Point2 sen;
};

/// Reference-frame truth: either a sen -> ref model or control points.
struct GroundTruth {
  std::variant<TransformModel, std::vector<ControlPoint>> truth;

  bool point_based() const noexcept { return truth.index() == 1; }
  /// The model itself, or a projective fit of the control points.
  TransformModel model() const;
};

/// A correspondence expressed in pixel coordinates.
struct Correspondence {
  Point2 ref;
  Point2 sen;
};

/// Number of correspondences with |gt(sen) - ref| <= tol.
std::size_t classify_correct(std::span<const Correspondence> matches,
                             const GroundTruth& gt, double tol = 3.0);

/// Nc / N; throws Error(InvalidArgument) when N == 0.
double cmr(std::size_t correct, std::size_t total);

/// sqrt(mean squared point distance); pairs are (ref, aligned sen).
double rmse(std::span<const Correspondence> pairs);

/// Transform file or `x_ref y_ref x_sen y_sen` lines with '#' comments.
GroundTruth load_ground_truth(const std::filesystem::path& path);

struct RegistrationReport {
  std::size_t n_keypoints_ref = 0;
  std::size_t n_keypoints_sen = 0;
  std::size_t n_described_ref = 0;
  std::size_t n_described_sen = 0;
  std::size_t n_initial = 0;
  std::size_t n_oriented = 0;
  std::size_t n_ransac = 0;               // N
  std::optional<std::size_t> n_correct;   // Nc, with ground truth only
  std::optional<double> cmr;
  double rmse_px = 0.0;
  std::optional<double> gt_corner_error_px;
  std::string model_kind;
  std::vector<double> matrix;  // 9 entries, row-major
  bool unreliable = false;     // N below the reliability threshold
  std::vector<std::pair<std::string, double>> stage_times_s;

  /// JSON document; timing fields are omitted when `include_timing` is false.
  std::string to_json(bool include_timing = true) const;
};

inline constexpr std::size_t kReliableMatchCount = 8;

}  // namespace ampiifd
