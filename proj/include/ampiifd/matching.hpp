#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ampiifd/descriptor.hpp"
#include "ampiifd/transform.hpp"

namespace ampiifd {

struct MatchParams {
  int bbf_max_checks = 200;
  double bin_width = 5.0;  // degrees
  bool include_adjacent_bins = true;
  double ransac_threshold = 3.0;  // pixels
  int ransac_iterations = 2000;
  std::uint64_t ransac_seed = 42;
  double ratio_threshold = 0.9;
  bool use_ratio_test = true;

  void validate() const;
};

struct MatchPair {
  std::size_t ref_index = 0;  // into the reference described-keypoint list
  std::size_t sen_index = 0;
  double distance = 0.0;      // Euclidean descriptor distance
  double delta_phi = 0.0;     // degrees in [0, 360)
};

/// Neighbour found by a query; `index` addresses the indexed descriptor list.
struct Neighbor {
  std::size_t index = std::numeric_limits<std::size_t>::max();
  double distance = std::numeric_limits<double>::infinity();

  bool valid() const noexcept { return index != std::numeric_limits<std::size_t>::max(); }
};

struct NeighborPair {
  Neighbor nearest;
  Neighbor second;
};

/// kd-tree over 128-d descriptors: split on the dimension of maximum spread at
/// its median, leaves of at most 16 points, tight bounding boxes per node.
class DescriptorIndex {
 public:
  static constexpr std::size_t kLeafSize = 16;

  explicit DescriptorIndex(std::vector<Descriptor> descriptors);

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t leaf_count() const noexcept { return leaf_count_; }
  const Descriptor& at(std::size_t i) const { return points_.at(i); }

  /// Best-bin-first search visiting at most max_checks leaves. Candidates are
  /// ordered by (distance, index); with max_checks >= leaf_count() the result
  /// equals an exhaustive scan.
  NeighborPair query(std::span<const double, kDescriptorSize> q,
                     std::size_t max_checks) const;

 private:
  struct Node {
    // Leaf when `left` < 0: points order_[begin, end).
    int left = -1;
    int right = -1;
    int split_dim = 0;
    double split_value = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t box = 0;  // offset into boxes_ (lo then hi, 2 * 128 doubles)
  };

  int build(std::size_t begin, std::size_t end);
  double box_distance(const Node& node, const double* q) const;

  std::vector<Descriptor> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::vector<double> boxes_;
  std::size_t leaf_count_ = 0;
};

DescriptorIndex build_index(std::vector<Descriptor> descriptors);

NeighborPair bbf_query(const DescriptorIndex& index,
                       std::span<const double, kDescriptorSize> query,
                       std::size_t max_checks);

/// Mutual nearest neighbours (plus the ratio test on the forward query);
/// delta_phi = (phi_ref - phi_sen in degrees) mod 360.
std::vector<MatchPair> bilateral_match(std::span<const DescribedKeyPoint> ref,
                                       std::span<const DescribedKeyPoint> sen,
                                       const MatchParams& params);

/// (a - b) mod 360 in [0, 360).
double wrap_degrees(double degrees);

/// Keeps matches in the modal delta_phi bin (and its circular neighbours when
/// include_adjacent_bins). Throws on empty input.
std::vector<MatchPair> orientation_filter(std::span<const MatchPair> matches,
                                          const MatchParams& params);

struct RansacResult {
  std::vector<MatchPair> inliers;
  TransformModel model;  // least-squares refit on the inliers, sen -> ref
};

/// Seeded fixed-iteration RANSAC of a model mapping sensed points onto
/// reference points. Throws Error(Degenerate) for too few matches and
/// Error(NoModel) when no consensus reaches the minimal sample size.
RansacResult ransac(std::span<const MatchPair> matches,
                    std::span<const KeyPoint> ref_keypoints,
                    std::span<const KeyPoint> sen_keypoints, ModelKind kind,
                    const MatchParams& params);

/// Same, on explicit correspondences (from = sensed, to = reference).
struct PairRansacResult {
  std::vector<std::size_t> inliers;  // indices into `pairs`, ascending
  TransformModel model;
};
PairRansacResult ransac_pairs(std::span<const PointPair> pairs, ModelKind kind,
                              const MatchParams& params);

/// One line per match: `ref_x ref_y sen_x sen_y distance delta_phi stage`.
void append_matches(std::ostream& out, std::span<const MatchPair> matches,
                    std::span<const KeyPoint> ref_keypoints,
                    std::span<const KeyPoint> sen_keypoints, std::string_view stage);

}  // namespace ampiifd
