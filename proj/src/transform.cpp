#include "ampiifd/transform.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ampiifd/error.hpp"

namespace ampiifd {
namespace {

constexpr double kMinDet = 1e-12;
constexpr double kRankTolerance = 1e-10;

[[noreturn]] void degenerate(const std::string& what) {
  fail(ErrorKind::Degenerate, what);
}

void require_count(ModelKind kind, std::size_t n) {
  if (n < static_cast<std::size_t>(minimal_sample_size(kind))) {
    degenerate("too few correspondences for a " + std::string(to_string(kind)) +
               " model");
  }
}

struct Centered {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();  // sum of centred outer products
};

Centered centered(std::span<const PointPair> pairs, bool use_from) {
  Centered c;
  for (const auto& p : pairs) {
    const Point2& q = use_from ? p.from : p.to;
    c.mean += Eigen::Vector2d(q.x, q.y);
  }
  c.mean /= static_cast<double>(pairs.size());
  for (const auto& p : pairs) {
    const Point2& q = use_from ? p.from : p.to;
    const Eigen::Vector2d d = Eigen::Vector2d(q.x, q.y) - c.mean;
    c.scatter += d * d.transpose();
  }
  return c;
}

// Similarity that moves the centroid to the origin and sets the mean
// distance from it to sqrt(2).
Eigen::Matrix3d hartley_normalization(std::span<const PointPair> pairs, bool use_from) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pairs) {
    const Point2& q = use_from ? p.from : p.to;
    mean += Eigen::Vector2d(q.x, q.y);
  }
  mean /= static_cast<double>(pairs.size());
  double dist = 0.0;
  for (const auto& p : pairs) {
    const Point2& q = use_from ? p.from : p.to;
    dist += (Eigen::Vector2d(q.x, q.y) - mean).norm();
  }
  dist /= static_cast<double>(pairs.size());
  if (!(dist > 1e-12)) degenerate("degenerate configuration: coincident points");
  const double s = std::sqrt(2.0) / dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  return t;
}

TransformModel estimate_similarity(std::span<const PointPair> pairs) {
  const Centered from = centered(pairs, true);
  const Centered to = centered(pairs, false);
  double num_a = 0.0, num_b = 0.0, den = 0.0;
  for (const auto& p : pairs) {
    const double fx = p.from.x - from.mean.x();
    const double fy = p.from.y - from.mean.y();
    const double tx = p.to.x - to.mean.x();
    const double ty = p.to.y - to.mean.y();
    num_a += fx * tx + fy * ty;
    num_b += fx * ty - fy * tx;
    den += fx * fx + fy * fy;
  }
  if (!(den > 1e-12 * static_cast<double>(pairs.size()))) {
    degenerate("degenerate configuration: coincident points");
  }
  const double a = num_a / den;
  const double b = num_b / den;
  Eigen::Matrix3d m;
  m << a, -b, to.mean.x() - (a * from.mean.x() - b * from.mean.y()),
       b, a, to.mean.y() - (b * from.mean.x() + a * from.mean.y()),
       0, 0, 1;
  return TransformModel(ModelKind::Similarity, m);
}

TransformModel estimate_affine(std::span<const PointPair> pairs) {
  const Centered from = centered(pairs, true);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(from.scatter);
  const double lmax = eig.eigenvalues()(1);
  if (!(lmax > 0.0) || eig.eigenvalues()(0) <= kRankTolerance * lmax) {
    degenerate("degenerate configuration: collinear points");
  }
  // Normal equations in centred source coordinates: scatter * L^T = cross.
  Eigen::Vector2d to_mean = Eigen::Vector2d::Zero();
  for (const auto& p : pairs) to_mean += Eigen::Vector2d(p.to.x, p.to.y);
  to_mean /= static_cast<double>(pairs.size());
  Eigen::Matrix2d cross = Eigen::Matrix2d::Zero();
  for (const auto& p : pairs) {
    const Eigen::Vector2d f = Eigen::Vector2d(p.from.x, p.from.y) - from.mean;
    const Eigen::Vector2d t = Eigen::Vector2d(p.to.x, p.to.y) - to_mean;
    cross += f * t.transpose();
  }
  const Eigen::Matrix2d lin = from.scatter.ldlt().solve(cross).transpose();
  const Eigen::Vector2d trans = to_mean - lin * from.mean;
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m.topLeftCorner<2, 2>() = lin;
  m.topRightCorner<2, 1>() = trans;
  return TransformModel(ModelKind::Affine, m);
}

TransformModel estimate_projective(std::span<const PointPair> pairs) {
  const Centered from = centered(pairs, true);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(from.scatter);
  if (!(eig.eigenvalues()(1) > 0.0) ||
      eig.eigenvalues()(0) <= kRankTolerance * eig.eigenvalues()(1)) {
    degenerate("degenerate configuration: collinear points");
  }
  const Eigen::Matrix3d tf = hartley_normalization(pairs, true);
  const Eigen::Matrix3d tt = hartley_normalization(pairs, false);
  const Eigen::Index rows = std::max<Eigen::Index>(2 * pairs.size(), 9);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d f = tf * Eigen::Vector3d(pairs[i].from.x, pairs[i].from.y, 1.0);
    const Eigen::Vector3d t = tt * Eigen::Vector3d(pairs[i].to.x, pairs[i].to.y, 1.0);
    const double x = f.x(), y = f.y(), u = t.x(), v = t.y();
    const Eigen::Index r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(7) <= kRankTolerance * sv(0)) {
    degenerate("degenerate configuration: rank-deficient DLT system");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Eigen::Matrix3d m = tt.inverse() * hn * tf;
  if (std::abs(m(2, 2)) > 1e-15) m /= m(2, 2);
  else m /= m.norm();
  if (!(std::abs(m.determinant()) > kMinDet)) {
    degenerate("degenerate configuration: singular homography");
  }
  return TransformModel(ModelKind::Projective, m);
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Similarity:
      return "similarity";
    case ModelKind::Affine:
      return "affine";
    case ModelKind::Projective:
      return "projective";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "similarity") return ModelKind::Similarity;
  if (name == "affine") return ModelKind::Affine;
  if (name == "projective") return ModelKind::Projective;
  fail(ErrorKind::Config, "model: unknown model kind '" + std::string(name) + "'");
}

int minimal_sample_size(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Similarity:
      return 2;
    case ModelKind::Affine:
      return 3;
    case ModelKind::Projective:
      return 4;
  }
  return 4;
}

TransformModel::TransformModel(ModelKind kind, const Eigen::Matrix3d& matrix)
    : kind_(kind), matrix_(matrix) {
  require(matrix.allFinite(), "transform matrix must be finite");
  if (kind != ModelKind::Projective) {
    require(matrix(2, 0) == 0.0 && matrix(2, 1) == 0.0 && matrix(2, 2) == 1.0,
            "affine-class transform must have last row (0, 0, 1)");
  }
  if (kind == ModelKind::Similarity) {
    require(matrix(0, 0) == matrix(1, 1) && matrix(0, 1) == -matrix(1, 0),
            "similarity transform must be a scaled rotation");
  }
  if (kind == ModelKind::Projective && matrix(2, 2) != 0.0) matrix_ /= matrix(2, 2);
  if (!(std::abs(matrix_.determinant()) > kMinDet)) {
    fail(ErrorKind::Degenerate, "transform matrix is not invertible");
  }
}

TransformModel TransformModel::identity(ModelKind kind) {
  return TransformModel(kind, Eigen::Matrix3d::Identity());
}

TransformModel TransformModel::inverse() const {
  const Eigen::Matrix3d& m = matrix_;
  Eigen::Matrix3d inv = Eigen::Matrix3d::Identity();
  if (kind_ == ModelKind::Similarity) {
    const double a = m(0, 0), b = m(1, 0);
    const double r = a * a + b * b;
    const double ia = a / r, ib = b / r;
    inv(0, 0) = ia;
    inv(0, 1) = ib;
    inv(1, 0) = -ib;
    inv(1, 1) = ia;
    inv(0, 2) = -(ia * m(0, 2) + ib * m(1, 2));
    inv(1, 2) = -(-ib * m(0, 2) + ia * m(1, 2));
  } else if (kind_ == ModelKind::Affine) {
    const Eigen::Matrix2d lin = m.topLeftCorner<2, 2>().inverse();
    inv.topLeftCorner<2, 2>() = lin;
    inv.topRightCorner<2, 1>() = -lin * m.topRightCorner<2, 1>();
  } else {
    inv = m.inverse();
    if (std::abs(inv(2, 2)) > 1e-15) inv /= inv(2, 2);
  }
  return TransformModel(kind_, inv);
}

TransformModel estimate(ModelKind kind, std::span<const PointPair> pairs) {
  require_count(kind, pairs.size());
  switch (kind) {
    case ModelKind::Similarity:
      return estimate_similarity(pairs);
    case ModelKind::Affine:
      return estimate_affine(pairs);
    case ModelKind::Projective:
      return estimate_projective(pairs);
  }
  degenerate("unknown model kind");
}

Point2 apply(const TransformModel& model, Point2 p) {
  const Eigen::Matrix3d& m = model.matrix();
  const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
  if (std::abs(w) < 1e-12) fail(ErrorKind::Degenerate, "point at infinity");
  return {(m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / w,
          (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / w};
}

Image warp_image(const Image& sensed, const TransformModel& model, int out_width,
                 int out_height) {
  require(out_width >= 1 && out_height >= 1, "warp_image: output size must be >= 1");
  const TransformModel inv = model.inverse();
  const Eigen::Matrix3d& m = inv.matrix();
  const double xmax = sensed.width() - 1;
  const double ymax = sensed.height() - 1;
  Image out(out_width, out_height, 0.0);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const double w = m(2, 0) * x + m(2, 1) * y + m(2, 2);
      if (std::abs(w) < 1e-12) continue;
      const double sx = (m(0, 0) * x + m(0, 1) * y + m(0, 2)) / w;
      const double sy = (m(1, 0) * x + m(1, 1) * y + m(1, 2)) / w;
      if (!(sx >= 0.0 && sy >= 0.0 && sx <= xmax && sy <= ymax)) continue;
      out(x, y) = bilinear_sample(sensed, sx, sy);
    }
  }
  return out;
}

Image checkerboard_mosaic(const Image& ref, const Image& warped, int tile) {
  require(ref.same_shape(warped), "checkerboard_mosaic: dimension mismatch");
  require(tile >= 1, "checkerboard_mosaic: tile must be >= 1");
  Image out(ref.width(), ref.height());
  for (int y = 0; y < ref.height(); ++y) {
    for (int x = 0; x < ref.width(); ++x) {
      out(x, y) = ((x / tile + y / tile) % 2 == 0) ? ref(x, y) : warped(x, y);
    }
  }
  return out;
}

RgbImage rgb_overlay(const Image& ref, const Image& warped) {
  require(ref.same_shape(warped), "rgb_overlay: dimension mismatch");
  RgbImage out(ref.width(), ref.height());
  for (int y = 0; y < ref.height(); ++y) {
    for (int x = 0; x < ref.width(); ++x) {
      double* px = out.pixel(x, y);
      px[0] = ref(x, y);
      px[1] = warped(x, y);
      px[2] = 0.0;
    }
  }
  return out;
}

std::string format_transform(const TransformModel& model) {
  std::string s(to_string(model.kind()));
  s += '\n';
  char buf[32];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", model.matrix()(r, c));
      s += buf;
      s += (r == 2 && c == 2) ? '\n' : ' ';
    }
  }
  return s;
}

void write_transform(const TransformModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Input, "unwritable path: " + path.string());
  out << format_transform(model);
}

TransformModel read_transform(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Input, "unreadable file: " + path.string());
  std::string kind_line;
  std::getline(in, kind_line);
  std::istringstream kind_stream(kind_line);
  std::string kind_name;
  kind_stream >> kind_name;
  ModelKind kind;
  try {
    kind = parse_model_kind(kind_name);
  } catch (const Error&) {
    fail(ErrorKind::Input, "malformed transform file: " + path.string());
  }
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) {
    if (!(in >> m(i / 3, i % 3))) {
      fail(ErrorKind::Input, "malformed transform file: " + path.string());
    }
  }
  return TransformModel(kind, m);
}

}  // namespace ampiifd
