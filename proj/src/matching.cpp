#include "ampiifd/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <queue>

#include "ampiifd/error.hpp"
#include "ampiifd/simd.hpp"

namespace ampiifd {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Lexicographic (distance^2, index) ordering keeps ties deterministic and
// identical to an exhaustive scan.
struct Best2 {
  double d0 = std::numeric_limits<double>::infinity();
  std::size_t i0 = std::numeric_limits<std::size_t>::max();
  double d1 = std::numeric_limits<double>::infinity();
  std::size_t i1 = std::numeric_limits<std::size_t>::max();

  static bool less(double da, std::size_t ia, double db, std::size_t ib) {
    return da < db || (da == db && ia < ib);
  }

  void offer(double d, std::size_t i) {
    if (less(d, i, d0, i0)) {
      d1 = d0;
      i1 = i0;
      d0 = d;
      i0 = i;
    } else if (less(d, i, d1, i1)) {
      d1 = d;
      i1 = i;
    }
  }
};

}  // namespace

void MatchParams::validate() const {
  if (bbf_max_checks < 1) fail(ErrorKind::Config, "bbf_max_checks: must be >= 1");
  if (!(bin_width > 0.0) || bin_width > 360.0) {
    fail(ErrorKind::Config, "bin_width: must lie in (0, 360]");
  }
  const double bins = 360.0 / bin_width;
  if (std::abs(bins - std::round(bins)) > 1e-9) {
    fail(ErrorKind::Config, "bin_width: must divide 360");
  }
  if (!(ransac_threshold > 0.0)) fail(ErrorKind::Config, "ransac_threshold: must be > 0");
  if (ransac_iterations < 1) fail(ErrorKind::Config, "ransac_iterations: must be >= 1");
  if (!(ratio_threshold > 0.0)) fail(ErrorKind::Config, "ratio_threshold: must be > 0");
}

// ---- kd-tree ----

DescriptorIndex::DescriptorIndex(std::vector<Descriptor> descriptors)
    : points_(std::move(descriptors)) {
  require(!points_.empty(), "build_index: at least one descriptor is required");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * (points_.size() / kLeafSize + 1));
  build(0, points_.size());
}

int DescriptorIndex::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  const std::size_t box = boxes_.size();
  boxes_.resize(box + 2 * kDescriptorSize);
  double* lo = boxes_.data() + box;
  double* hi = lo + kDescriptorSize;
  std::fill(lo, lo + kDescriptorSize, std::numeric_limits<double>::infinity());
  std::fill(hi, hi + kDescriptorSize, -std::numeric_limits<double>::infinity());
  for (std::size_t k = begin; k < end; ++k) {
    const auto& v = points_[order_[k]].values;
    for (std::size_t d = 0; d < kDescriptorSize; ++d) {
      lo[d] = std::min(lo[d], v[d]);
      hi[d] = std::max(hi[d], v[d]);
    }
  }
  int split_dim = 0;
  double spread = -1.0;
  for (std::size_t d = 0; d < kDescriptorSize; ++d) {
    if (hi[d] - lo[d] > spread) {
      spread = hi[d] - lo[d];
      split_dim = static_cast<int>(d);
    }
  }

  Node node;
  node.begin = begin;
  node.end = end;
  node.box = box;
  if (end - begin <= kLeafSize || !(spread > 0.0)) {
    ++leaf_count_;
    nodes_[id] = node;
    return id;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  const auto key_less = [&](std::size_t a, std::size_t b) {
    const double va = points_[a].values[split_dim];
    const double vb = points_[b].values[split_dim];
    return va < vb || (va == vb && a < b);
  };
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, key_less);
  node.split_dim = split_dim;
  node.split_value = points_[order_[mid]].values[split_dim];
  node.left = build(begin, mid);
  node.right = build(mid, end);
  nodes_[id] = node;
  return id;
}

double DescriptorIndex::box_distance(const Node& node, const double* q) const {
  const double* lo = boxes_.data() + node.box;
  const double* hi = lo + kDescriptorSize;
  double sum = 0.0;
  for (std::size_t d = 0; d < kDescriptorSize; ++d) {
    double gap = 0.0;
    if (q[d] < lo[d]) gap = lo[d] - q[d];
    else if (q[d] > hi[d]) gap = q[d] - hi[d];
    sum += gap * gap;
  }
  return sum;
}

NeighborPair DescriptorIndex::query(std::span<const double, kDescriptorSize> q,
                                    std::size_t max_checks) const {
  const auto distance2 = simd::kernels().squared_distance;
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  heap.emplace(box_distance(nodes_[0], q.data()), 0);
  Best2 best;
  std::size_t checks = 0;
  while (!heap.empty() && checks < max_checks) {
    const auto [bound, start] = heap.top();
    heap.pop();
    // Slack keeps the bound admissible under rounding.
    if (bound > best.d1 * (1.0 + 1e-12)) break;
    int id = start;
    while (nodes_[id].left >= 0) {
      const Node& n = nodes_[id];
      const bool go_left = q[n.split_dim] < n.split_value;
      const int near = go_left ? n.left : n.right;
      const int far = go_left ? n.right : n.left;
      heap.emplace(box_distance(nodes_[far], q.data()), far);
      id = near;
    }
    const Node& leaf = nodes_[id];
    for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
      const std::size_t idx = order_[k];
      best.offer(distance2(q.data(), points_[idx].values.data(), kDescriptorSize), idx);
    }
    ++checks;
  }
  NeighborPair out;
  if (best.i0 != std::numeric_limits<std::size_t>::max()) {
    out.nearest = {best.i0, std::sqrt(best.d0)};
  }
  if (best.i1 != std::numeric_limits<std::size_t>::max()) {
    out.second = {best.i1, std::sqrt(best.d1)};
  }
  return out;
}

DescriptorIndex build_index(std::vector<Descriptor> descriptors) {
  return DescriptorIndex(std::move(descriptors));
}

NeighborPair bbf_query(const DescriptorIndex& index,
                       std::span<const double, kDescriptorSize> query,
                       std::size_t max_checks) {
  return index.query(query, max_checks);
}

// ---- matching stages ----

double wrap_degrees(double degrees) {
  double w = std::fmod(degrees, 360.0);
  if (w < 0.0) w += 360.0;
  if (w >= 360.0) w -= 360.0;
  return w;
}

std::vector<MatchPair> bilateral_match(std::span<const DescribedKeyPoint> ref,
                                       std::span<const DescribedKeyPoint> sen,
                                       const MatchParams& params) {
  params.validate();
  std::vector<MatchPair> out;
  if (ref.empty() || sen.empty()) return out;
  const auto descriptors = [](std::span<const DescribedKeyPoint> set) {
    std::vector<Descriptor> d;
    d.reserve(set.size());
    for (const auto& item : set) d.push_back(item.descriptor);
    return d;
  };
  const DescriptorIndex sen_index(descriptors(sen));
  const DescriptorIndex ref_index(descriptors(ref));
  const auto checks = static_cast<std::size_t>(params.bbf_max_checks);

  std::vector<std::size_t> backward(sen.size());
  for (std::size_t j = 0; j < sen.size(); ++j) {
    backward[j] = ref_index.query(sen[j].descriptor.values, checks).nearest.index;
  }
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const NeighborPair nn = sen_index.query(ref[i].descriptor.values, checks);
    const std::size_t j = nn.nearest.index;
    if (backward[j] != i) continue;
    if (params.use_ratio_test && sen.size() > 1 && nn.second.valid() &&
        nn.nearest.distance > params.ratio_threshold * nn.second.distance) {
      continue;
    }
    MatchPair m;
    m.ref_index = i;
    m.sen_index = j;
    m.distance = nn.nearest.distance;
    m.delta_phi = wrap_degrees((ref[i].keypoint.orientation -
                                sen[j].keypoint.orientation) * kRadToDeg);
    out.push_back(m);
  }
  return out;
}

std::vector<MatchPair> orientation_filter(std::span<const MatchPair> matches,
                                          const MatchParams& params) {
  params.validate();
  require(!matches.empty(), "orientation_filter: empty match list");
  const int nbins = static_cast<int>(std::lround(360.0 / params.bin_width));
  const auto bin_of = [&](double phi) {
    return std::clamp(static_cast<int>(std::floor(phi / params.bin_width)), 0, nbins - 1);
  };
  std::vector<int> count(nbins, 0);
  std::vector<double> sum(nbins, 0.0);
  std::vector<double> sum_sq(nbins, 0.0);
  for (const auto& m : matches) {
    const int b = bin_of(m.delta_phi);
    ++count[b];
    sum[b] += m.delta_phi;
    sum_sq[b] += m.delta_phi * m.delta_phi;
  }
  const auto variance = [&](int b) {
    const double mean = sum[b] / count[b];
    return std::max(0.0, sum_sq[b] / count[b] - mean * mean);
  };
  int modal = -1;
  for (int b = 0; b < nbins; ++b) {
    if (count[b] == 0) continue;
    if (modal < 0 || count[b] > count[modal] ||
        (count[b] == count[modal] && variance(b) < variance(modal))) {
      modal = b;
    }
  }
  std::vector<bool> keep(nbins, false);
  keep[modal] = true;
  if (params.include_adjacent_bins) {
    keep[(modal + 1) % nbins] = true;
    keep[(modal + nbins - 1) % nbins] = true;
  }
  std::vector<MatchPair> out;
  for (const auto& m : matches) {
    if (keep[bin_of(m.delta_phi)]) out.push_back(m);
  }
  return out;
}

void append_matches(std::ostream& out, std::span<const MatchPair> matches,
                    std::span<const KeyPoint> ref_keypoints,
                    std::span<const KeyPoint> sen_keypoints, std::string_view stage) {
  char line[256];
  for (const auto& m : matches) {
    const KeyPoint& r = ref_keypoints[m.ref_index];
    const KeyPoint& s = sen_keypoints[m.sen_index];
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g %.17g %.17g %.17g ", r.x,
                  r.y, s.x, s.y, m.distance, m.delta_phi);
    out << line << stage << '\n';
  }
}

}  // namespace ampiifd
