#include "ampiifd/evaluation.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "ampiifd/error.hpp"

namespace ampiifd {
namespace {

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

}  // namespace

TransformModel GroundTruth::model() const {
  if (const auto* m = std::get_if<TransformModel>(&truth)) return *m;
  const auto& points = std::get<std::vector<ControlPoint>>(truth);
  std::vector<PointPair> pairs;
  pairs.reserve(points.size());
  for (const auto& p : points) pairs.push_back({p.sen, p.ref});
  return estimate(ModelKind::Projective, pairs);
}

std::size_t classify_correct(std::span<const Correspondence> matches,
                             const GroundTruth& gt, double tol) {
  require(tol >= 0.0, "classify_correct: tolerance must be >= 0");
  if (matches.empty()) return 0;
  const TransformModel model = gt.model();
  std::size_t correct = 0;
  for (const auto& m : matches) {
    try {
      const Point2 p = apply(model, m.sen);
      if (std::hypot(p.x - m.ref.x, p.y - m.ref.y) <= tol) ++correct;
    } catch (const Error&) {
      // A point sent to infinity is never correct.
    }
  }
  return correct;
}

double cmr(std::size_t correct, std::size_t total) {
  require(total > 0, "cmr: undefined for zero established matches");
  require(correct <= total, "cmr: correct matches exceed established matches");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double rmse(std::span<const Correspondence> pairs) {
  require(!pairs.empty(), "rmse: empty point set");
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double dx = p.ref.x - p.sen.x;
    const double dy = p.ref.y - p.sen.y;
    sum += dx * dx + dy * dy;
  }
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Input, "unreadable file: " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    line = strip_comment(line);
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
  }
  if (lines.empty()) fail(ErrorKind::Input, "empty ground-truth file: " + path.string());

  std::istringstream first(lines.front());
  std::string token;
  first >> token;
  if (token == "similarity" || token == "affine" || token == "projective") {
    std::string joined;
    for (std::size_t i = 1; i < lines.size(); ++i) joined += lines[i] + ' ';
    std::istringstream values(joined);
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) {
      if (!(values >> m(i / 3, i % 3))) {
        fail(ErrorKind::Input, "malformed transform file: " + path.string());
      }
    }
    return {TransformModel(parse_model_kind(token), m)};
  }

  std::vector<ControlPoint> points;
  for (const auto& line : lines) {
    std::istringstream ls(line);
    ControlPoint cp;
    std::string extra;
    if (!(ls >> cp.ref.x >> cp.ref.y >> cp.sen.x >> cp.sen.y) || (ls >> extra)) {
      fail(ErrorKind::Input, "malformed control-point line in " + path.string() +
                                 ": '" + line + "'");
    }
    points.push_back(cp);
  }
  if (points.size() < 4) {
    fail(ErrorKind::Input, "at least 4 control points are required: " + path.string());
  }
  return {std::move(points)};
}

std::string RegistrationReport::to_json(bool include_timing) const {
  nlohmann::ordered_json j;
  j["n_keypoints_ref"] = n_keypoints_ref;
  j["n_keypoints_sen"] = n_keypoints_sen;
  j["n_described_ref"] = n_described_ref;
  j["n_described_sen"] = n_described_sen;
  j["n_initial"] = n_initial;
  j["n_oriented"] = n_oriented;
  j["n_ransac"] = n_ransac;
  j["n_correct"] = n_correct ? nlohmann::ordered_json(*n_correct) : nullptr;
  j["cmr"] = cmr ? nlohmann::ordered_json(*cmr) : nullptr;
  j["rmse_px"] = rmse_px;
  j["gt_corner_error_px"] =
      gt_corner_error_px ? nlohmann::ordered_json(*gt_corner_error_px) : nullptr;
  j["model_kind"] = model_kind;
  j["matrix"] = matrix;
  j["unreliable"] = unreliable;
  if (include_timing) {
    nlohmann::ordered_json times = nlohmann::ordered_json::object();
    for (const auto& [stage, seconds] : stage_times_s) times[stage] = seconds;
    j["stage_times_s"] = times;
  }
  return j.dump(2) + "\n";
}

}  // namespace ampiifd
