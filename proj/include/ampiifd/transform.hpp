#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ampiifd/image.hpp"

namespace ampiifd {

enum class ModelKind { Similarity, Affine, Projective };

std::string_view to_string(ModelKind kind) noexcept;
/// Parses "similarity" / "affine" / "projective"; throws Error(Config).
ModelKind parse_model_kind(std::string_view name);

/// Minimal number of correspondences: 2, 3, 4.
int minimal_sample_size(ModelKind kind) noexcept;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// `from` is mapped onto `to` by the estimated model.
struct PointPair {
  Point2 from;
  Point2 to;
};

/// Homogeneous planar transform. Affine-class matrices keep the last row at
/// exactly (0, 0, 1); projective ones are scaled so that m(2,2) == 1.
class TransformModel {
 public:
  TransformModel() = default;
  /// Validates kind-specific structure and invertibility.
  TransformModel(ModelKind kind, const Eigen::Matrix3d& matrix);

  static TransformModel identity(ModelKind kind = ModelKind::Affine);

  ModelKind kind() const noexcept { return kind_; }
  const Eigen::Matrix3d& matrix() const noexcept { return matrix_; }

  TransformModel inverse() const;

 private:
  ModelKind kind_ = ModelKind::Affine;
  Eigen::Matrix3d matrix_ = Eigen::Matrix3d::Identity();
};

/// Least-squares fit mapping every `from` onto its `to`. Throws
/// Error(Degenerate) on too few pairs or rank-deficient configurations.
TransformModel estimate(ModelKind kind, std::span<const PointPair> pairs);

/// Homogeneous multiply then dehomogenize; throws for |w| < 1e-12.
Point2 apply(const TransformModel& model, Point2 p);

/// Inverse-mapped bilinear resampling; pixels whose source lies outside the
/// sensed frame are 0.
Image warp_image(const Image& sensed, const TransformModel& model, int out_width,
                 int out_height);

/// Alternating tile x tile blocks from ref (even parity) and warped.
Image checkerboard_mosaic(const Image& ref, const Image& warped, int tile = 64);

/// R = ref, G = warped, B = 0.
RgbImage rgb_overlay(const Image& ref, const Image& warped);

/// Line 1: kind. Line 2: nine row-major entries at full precision.
void write_transform(const TransformModel& model, const std::filesystem::path& path);
TransformModel read_transform(const std::filesystem::path& path);
std::string format_transform(const TransformModel& model);

}  // namespace ampiifd
