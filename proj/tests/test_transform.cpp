#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <random>

#include "ampiifd/error.hpp"
#include "ampiifd/transform.hpp"
#include "test_util.hpp"

namespace ampiifd {
namespace {

Eigen::Matrix3d mat(std::initializer_list<double> v) {
  Eigen::Matrix3d m;
  auto it = v.begin();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = *it++;
  return m;
}

bool same_pixels(const Image& a, const Image& b) {
  return a.width() == b.width() && a.height() == b.height() &&
         std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

double max_diff(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

Point2 map(const Eigen::Matrix3d& m, Point2 p) {
  const Eigen::Vector3d h = m * Eigen::Vector3d(p.x, p.y, 1.0);
  return {h.x() / h.z(), h.y() / h.z()};
}

std::vector<PointPair> pairs_under(const Eigen::Matrix3d& m, std::size_t n, std::uint64_t seed,
                                   double noise = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 300.0);
  std::normal_distribution<double> e(0.0, noise > 0 ? noise : 1.0);
  std::vector<PointPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p{u(rng), u(rng)};
    Point2 q = map(m, p);
    if (noise > 0) {
      q.x += e(rng);
      q.y += e(rng);
    }
    out.push_back({p, q});
  }
  return out;
}

const Eigen::Matrix3d kSimilarity = mat({1.2 * std::cos(0.4), -1.2 * std::sin(0.4), 13.0,
                                          1.2 * std::sin(0.4), 1.2 * std::cos(0.4), -4.0,
                                          0, 0, 1});
const Eigen::Matrix3d kAffine = mat({0.9, 0.25, -20.0, -0.1, 1.15, 8.0, 0, 0, 1});
const Eigen::Matrix3d kProjective = mat({1.05, 0.1, 5.0, -0.05, 0.98, 12.0, 2e-4, -1e-4, 1});

TEST(ModelKind, NamesAndSampleSizes) {
  EXPECT_EQ(parse_model_kind("similarity"), ModelKind::Similarity);
  EXPECT_EQ(parse_model_kind("affine"), ModelKind::Affine);
  EXPECT_EQ(parse_model_kind("projective"), ModelKind::Projective);
  EXPECT_EQ(to_string(ModelKind::Projective), "projective");
  EXPECT_THROW(parse_model_kind("rigid"), Error);
  EXPECT_EQ(minimal_sample_size(ModelKind::Similarity), 2);
  EXPECT_EQ(minimal_sample_size(ModelKind::Affine), 3);
  EXPECT_EQ(minimal_sample_size(ModelKind::Projective), 4);
}

TEST(TransformModel, StructureValidated) {
  EXPECT_THROW(TransformModel(ModelKind::Affine, mat({1, 0, 0, 0, 1, 0, 0.1, 0, 1})), Error);
  EXPECT_THROW(TransformModel(ModelKind::Similarity, mat({1, 0, 0, 0, 2, 0, 0, 0, 1})), Error);
  EXPECT_THROW(TransformModel(ModelKind::Affine, mat({1, 2, 0, 2, 4, 0, 0, 0, 1})), Error);
  EXPECT_NO_THROW(TransformModel(ModelKind::Similarity, kSimilarity));
}

TEST(TransformModel, ProjectiveScaledToUnitCorner) {
  const TransformModel m(ModelKind::Projective, 3.0 * kProjective);
  EXPECT_EQ(m.matrix()(2, 2), 1.0);
  EXPECT_LT(max_diff(m.matrix(), kProjective), 1e-15);
}

TEST(TransformModel, Inverse) {
  const TransformModel m(ModelKind::Projective, kProjective);
  const Point2 p = apply(m.inverse(), apply(m, {40.0, 70.0}));
  EXPECT_NEAR(p.x, 40.0, 1e-10);
  EXPECT_NEAR(p.y, 70.0, 1e-10);
}

TEST(Estimate, IdentityCorrespondences) {
  const auto pairs = pairs_under(Eigen::Matrix3d::Identity(), 10, 1);
  for (ModelKind kind : {ModelKind::Similarity, ModelKind::Affine, ModelKind::Projective}) {
    EXPECT_LT(max_diff(estimate(kind, pairs).matrix(), Eigen::Matrix3d::Identity()), 1e-9);
  }
}

TEST(Estimate, TranslationAffine) {
  const std::vector<PointPair> pairs{{{0, 0}, {5, -3}}, {{10, 0}, {15, -3}},
                                     {{0, 10}, {5, 7}}, {{10, 10}, {15, 7}}};
  const TransformModel m = estimate(ModelKind::Affine, pairs);
  EXPECT_LT(max_diff(m.matrix(), mat({1, 0, 5, 0, 1, -3, 0, 0, 1})), 1e-12);
}

TEST(Estimate, SimilarityRotate90Scale2) {
  std::vector<PointPair> pairs;
  for (Point2 p : {Point2{1, 0}, Point2{0, 1}, Point2{3, -2}, Point2{-1, 4}})
    pairs.push_back({p, {-2 * p.y, 2 * p.x}});
  const TransformModel m = estimate(ModelKind::Similarity, pairs);
  EXPECT_LT(max_diff(m.matrix(), mat({0, -2, 0, 2, 0, 0, 0, 0, 1})), 1e-9);
}

TEST(Estimate, ExactRecoveryPerKind) {
  EXPECT_LT(max_diff(estimate(ModelKind::Similarity, pairs_under(kSimilarity, 30, 2)).matrix(),
                     kSimilarity), 1e-9);
  EXPECT_LT(max_diff(estimate(ModelKind::Affine, pairs_under(kAffine, 30, 3)).matrix(), kAffine),
            1e-9);
  EXPECT_LT(max_diff(estimate(ModelKind::Projective, pairs_under(kProjective, 30, 4)).matrix(),
                     kProjective), 1e-9);
}

TEST(Estimate, MinimalSamplesInterpolate) {
  const struct {
    ModelKind kind;
    Eigen::Matrix3d truth;
  } cases[] = {{ModelKind::Similarity, kSimilarity},
               {ModelKind::Affine, kAffine},
               {ModelKind::Projective, kProjective}};
  for (const auto& c : cases) {
    // Perturbed targets: the model must still pass through every sample.
    auto pairs = pairs_under(c.truth, minimal_sample_size(c.kind), 5, 0.8);
    if (c.kind == ModelKind::Similarity) pairs = pairs_under(c.truth, 2, 5);
    const TransformModel m = estimate(c.kind, pairs);
    for (const auto& p : pairs) {
      const Point2 q = apply(m, p.from);
      EXPECT_NEAR(q.x, p.to.x, 1e-9);
      EXPECT_NEAR(q.y, p.to.y, 1e-9);
    }
  }
}

// Dense least squares over the parameter vector.
Eigen::Matrix3d lstsq_oracle(ModelKind kind, const std::vector<PointPair>& pairs) {
  const int np = kind == ModelKind::Similarity ? 4 : 6;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * pairs.size(), np);
  Eigen::VectorXd b(2 * pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double x = pairs[i].from.x, y = pairs[i].from.y;
    if (kind == ModelKind::Similarity) {
      a.row(2 * i) << x, -y, 1, 0;
      a.row(2 * i + 1) << y, x, 0, 1;
    } else {
      a.row(2 * i) << x, y, 1, 0, 0, 0;
      a.row(2 * i + 1) << 0, 0, 0, x, y, 1;
    }
    b(2 * i) = pairs[i].to.x;
    b(2 * i + 1) = pairs[i].to.y;
  }
  const Eigen::VectorXd p = a.colPivHouseholderQr().solve(b);
  if (kind == ModelKind::Similarity) return mat({p(0), -p(1), p(2), p(1), p(0), p(3), 0, 0, 1});
  return mat({p(0), p(1), p(2), p(3), p(4), p(5), 0, 0, 1});
}

TEST(Estimate, NoisyLeastSquaresMatchesDenseOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ps = pairs_under(kSimilarity, 40, 100 + seed, 1.5);
    EXPECT_LT(max_diff(estimate(ModelKind::Similarity, ps).matrix(),
                       lstsq_oracle(ModelKind::Similarity, ps)), 1e-9);
    const auto pa = pairs_under(kAffine, 40, 200 + seed, 1.5);
    EXPECT_LT(max_diff(estimate(ModelKind::Affine, pa).matrix(),
                       lstsq_oracle(ModelKind::Affine, pa)), 1e-9);
  }
}

TEST(Estimate, ProjectiveInvariantToGlobalSimilarity) {
  const Eigen::Matrix3d s = mat({0.3 * std::cos(1.1), -0.3 * std::sin(1.1), 250.0,
                                 0.3 * std::sin(1.1), 0.3 * std::cos(1.1), -75.0, 0, 0, 1});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto pairs = pairs_under(kProjective, 25, 300 + seed, 1.0);
    std::vector<PointPair> moved;
    for (const auto& p : pairs) moved.push_back({map(s, p.from), map(s, p.to)});
    const Eigen::Matrix3d h = estimate(ModelKind::Projective, pairs).matrix();
    Eigen::Matrix3d back = s.inverse() * estimate(ModelKind::Projective, moved).matrix() * s;
    back /= back(2, 2);
    EXPECT_LT(max_diff(h, back), 1e-7);
  }
}

TEST(Estimate, Errors) {
  const auto two = pairs_under(kAffine, 2, 6);
  EXPECT_THROW(estimate(ModelKind::Affine, two), Error);
  EXPECT_THROW(estimate(ModelKind::Similarity, pairs_under(kAffine, 1, 6)), Error);
  std::vector<PointPair> collinear;
  for (int i = 0; i < 6; ++i) collinear.push_back({{1.0 * i, 2.0 * i}, {3.0 * i, 1.0 * i}});
  try {
    estimate(ModelKind::Affine, collinear);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
  }
  EXPECT_THROW(estimate(ModelKind::Projective, collinear), Error);
  const std::vector<PointPair> same(3, PointPair{{1, 1}, {2, 2}});
  EXPECT_THROW(estimate(ModelKind::Similarity, same), Error);
}

TEST(Apply, Examples) {
  const Point2 a = apply(TransformModel::identity(), {7, 9});
  EXPECT_EQ(a, (Point2{7, 9}));
  const Point2 b = apply(TransformModel(ModelKind::Affine, mat({1, 0, 5, 0, 1, -3, 0, 0, 1})), {0, 0});
  EXPECT_EQ(b, (Point2{5, -3}));
  const Point2 c =
      apply(TransformModel(ModelKind::Projective, mat({1, 0, 0, 0, 1, 0, 0.01, 0, 1})), {10, 0});
  EXPECT_NEAR(c.x, 10.0 / 1.1, 1e-12);
  EXPECT_EQ(c.y, 0.0);
  EXPECT_NEAR(c.x, 9.0909, 1e-4);
}

TEST(Apply, PointAtInfinity) {
  const TransformModel m(ModelKind::Projective, mat({1, 0, 0, 0, 1, 0, 0.01, 0, 1}));
  try {
    apply(m, {-100, 5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("point at infinity"), std::string::npos);
  }
}

TEST(Warp, IdentityCropsAndPads) {
  const Image img = testing::random_image(20, 15, 7);
  const Image same = warp_image(img, TransformModel::identity(), 20, 15);
  EXPECT_TRUE(same_pixels(same, img));
  const Image bigger = warp_image(img, TransformModel::identity(), 25, 18);
  for (int y = 0; y < 18; ++y)
    for (int x = 0; x < 25; ++x) EXPECT_EQ(bigger(x, y), x < 20 && y < 15 ? img(x, y) : 0.0);
}

TEST(Warp, IntegerTranslation) {
  const Image img = testing::random_image(30, 10, 8);
  const TransformModel shift(ModelKind::Affine, mat({1, 0, 3, 0, 1, 0, 0, 0, 1}));
  const Image out = warp_image(img, shift, 30, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 30; ++x) EXPECT_EQ(out(x, y), x >= 3 ? img(x - 3, y) : 0.0);
}

TEST(Warp, OutsideFrameIsZero) {
  const Image img(16, 16, 0.7);
  const TransformModel away(ModelKind::Affine, mat({1, 0, 500, 0, 1, 500, 0, 0, 1}));
  for (double v : warp_image(img, away, 16, 16).data()) EXPECT_EQ(v, 0.0);
}

TEST(Warp, RoundTripOnSmoothImage) {
  Image img(96, 96);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x)
      img(x, y) = 0.5 + 0.4 * std::sin(x / 9.0) * std::cos(y / 11.0);
  const TransformModel m(ModelKind::Affine,
                         mat({0.97, 0.12, 2.5, -0.12, 0.97, 4.0, 0, 0, 1}));
  const Image there = warp_image(img, m, 96, 96);
  const Image back = warp_image(there, m.inverse(), 96, 96);
  double worst = 0.0;
  for (int y = 20; y < 76; ++y)
    for (int x = 20; x < 76; ++x) worst = std::max(worst, std::abs(back(x, y) - img(x, y)));
  EXPECT_LT(worst, 0.05);
}

TEST(Mosaic, Checkerboard) {
  const Image a = testing::random_image(40, 30, 9);
  EXPECT_TRUE(same_pixels(checkerboard_mosaic(a, a, 8), a));
  const Image b = testing::random_image(40, 30, 10);
  EXPECT_TRUE(same_pixels(checkerboard_mosaic(a, b, 40), a));
  const Image zero(5, 4, 0.0), one(5, 4, 1.0);
  const Image board = checkerboard_mosaic(zero, one, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_EQ(board(x, y), (x + y) % 2 == 0 ? 0.0 : 1.0);
  EXPECT_THROW(checkerboard_mosaic(zero, Image(4, 4), 1), Error);
  EXPECT_THROW(checkerboard_mosaic(zero, one, 0), Error);
}

TEST(Overlay, Channels) {
  const Image a = testing::random_image(12, 9, 11);
  const RgbImage same = rgb_overlay(a, a);
  const RgbImage red = rgb_overlay(a, Image(12, 9, 0.0));
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 12; ++x) {
      EXPECT_EQ(same.pixel(x, y)[0], same.pixel(x, y)[1]);
      EXPECT_EQ(red.pixel(x, y)[0], a(x, y));
      EXPECT_EQ(red.pixel(x, y)[1], 0.0);
      EXPECT_EQ(red.pixel(x, y)[2], 0.0);
    }
  }
  EXPECT_THROW(rgb_overlay(a, Image(3, 3)), Error);
}

TEST(Overlay, MisregistrationBandWidth) {
  Image edge(40, 20, 0.0);
  for (int y = 0; y < 20; ++y)
    for (int x = 20; x < 40; ++x) edge(x, y) = 1.0;
  const TransformModel shift(ModelKind::Affine, mat({1, 0, 2, 0, 1, 0, 0, 0, 1}));
  const RgbImage o = rgb_overlay(edge, warp_image(edge, shift, 40, 20));
  for (int y = 0; y < 20; ++y) {
    int band = 0;
    for (int x = 3; x < 40; ++x) band += std::abs(o.pixel(x, y)[0] - o.pixel(x, y)[1]) > 0.5;
    EXPECT_EQ(band, 2);
  }
}

TEST(Serialization, RoundTripIsExact) {
  const auto dir = testing::scratch_dir("transform_io");
  for (const TransformModel& m : {TransformModel(ModelKind::Similarity, kSimilarity),
                                  TransformModel(ModelKind::Affine, kAffine),
                                  TransformModel(ModelKind::Projective, kProjective)}) {
    write_transform(m, dir / "t.txt");
    const TransformModel back = read_transform(dir / "t.txt");
    EXPECT_EQ(back.kind(), m.kind());
    EXPECT_EQ(back.matrix(), m.matrix());
  }
  std::ifstream in(dir / "t.txt");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "projective");
  testing::write_bytes(dir / "bad.txt", "affine\n1 2 3\n");
  EXPECT_THROW(read_transform(dir / "bad.txt"), Error);
}

}  // namespace
}  // namespace ampiifd
