#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "ampiifd/error.hpp"
#include "ampiifd/evaluation.hpp"
#include "test_util.hpp"

namespace ampiifd {
namespace {

GroundTruth identity_gt() { return {TransformModel::identity()}; }

std::vector<Correspondence> random_pairs(std::size_t n, std::uint64_t seed, double spread = 4.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 200.0), e(-spread, spread);
  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 r{u(rng), u(rng)};
    out.push_back({r, {r.x + e(rng), r.y + e(rng)}});
  }
  return out;
}

TEST(ClassifyCorrect, IdentityExact) {
  std::vector<Correspondence> m;
  for (int i = 0; i < 10; ++i) m.push_back({{1.0 * i, 2.0 * i}, {1.0 * i, 2.0 * i}});
  EXPECT_EQ(classify_correct(m, identity_gt()), 10u);
}

TEST(ClassifyCorrect, DistanceFiveIsIncorrectAtThree) {
  const std::vector<Correspondence> m{{{0, 0}, {0, 0}}, {{10, 10}, {13, 14}}};
  EXPECT_EQ(classify_correct(m, identity_gt(), 3.0), 1u);
  EXPECT_EQ(classify_correct(m, identity_gt(), 5.0), 2u);
}

TEST(ClassifyCorrect, EmptyIsZero) {
  EXPECT_EQ(classify_correct(std::vector<Correspondence>{}, identity_gt()), 0u);
}

TEST(ClassifyCorrect, MonotoneInTolerance) {
  const auto m = random_pairs(200, 1);
  std::size_t last = 0;
  for (double tol = 0.0; tol <= 7.0; tol += 0.25) {
    const std::size_t nc = classify_correct(m, identity_gt(), tol);
    EXPECT_GE(nc, last);
    last = nc;
  }
  EXPECT_EQ(last, m.size());
}

TEST(ClassifyCorrect, ControlPointsFitProjective) {
  Eigen::Matrix3d h;
  h << 1.02, 0.05, 4.0, -0.03, 0.99, -6.0, 1e-4, 2e-4, 1.0;
  const TransformModel truth(ModelKind::Projective, h);
  std::vector<ControlPoint> cps;
  for (Point2 s : {Point2{0, 0}, Point2{200, 10}, Point2{15, 180}, Point2{190, 210},
                   Point2{100, 90}}) {
    cps.push_back({apply(truth, s), s});
  }
  const GroundTruth gt{cps};
  EXPECT_TRUE(gt.point_based());
  EXPECT_LT((gt.model().matrix() - h).cwiseAbs().maxCoeff(), 1e-9);
  const std::vector<Correspondence> m{{apply(truth, {50, 50}), {50, 50}},
                                      {apply(truth, {60, 50}), {50, 50}}};
  EXPECT_EQ(classify_correct(m, gt), 1u);
}

TEST(Cmr, Values) {
  EXPECT_NEAR(cmr(346, 423), 0.818, 0.0005);
  EXPECT_EQ(cmr(0, 17), 0.0);
  EXPECT_EQ(cmr(5, 5), 1.0);
  EXPECT_THROW(cmr(0, 0), Error);
  EXPECT_THROW(cmr(3, 2), Error);
}

TEST(Rmse, Values) {
  const std::vector<Correspondence> same{{{1, 2}, {1, 2}}, {{5, 5}, {5, 5}}};
  EXPECT_EQ(rmse(same), 0.0);
  EXPECT_EQ(rmse(std::vector<Correspondence>{{{0, 0}, {3, 4}}}), 5.0);
  EXPECT_NEAR(rmse(std::vector<Correspondence>{{{0, 0}, {3, 4}}, {{7, 7}, {7, 7}}}),
              std::sqrt(12.5), 1e-12);
  EXPECT_NEAR(std::sqrt(12.5), 3.53553, 1e-5);
  EXPECT_THROW(rmse(std::vector<Correspondence>{}), Error);
}

TEST(Rmse, OracleEquivalence) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = random_pairs(1 + seed * 7, 100 + seed);
    const double oracle = std::sqrt(
        std::accumulate(p.begin(), p.end(), 0.0,
                        [](double s, const Correspondence& c) {
                          return s + std::pow(c.ref.x - c.sen.x, 2) + std::pow(c.ref.y - c.sen.y, 2);
                        }) /
        p.size());
    EXPECT_NEAR(rmse(p), oracle, 1e-12);
    const std::size_t nc = seed % (p.size() + 1);
    EXPECT_NEAR(cmr(nc, p.size()), static_cast<double>(nc) / p.size(), 1e-12);
  }
}

TEST(Rmse, ReorderAndRigidMotionInvariant) {
  auto p = random_pairs(50, 7);
  const double base = rmse(p);
  std::mt19937_64 rng(8);
  std::shuffle(p.begin(), p.end(), rng);
  EXPECT_NEAR(rmse(p), base, 1e-12);
  const double c = std::cos(0.7), s = std::sin(0.7);
  for (auto& q : p) {
    for (Point2* pt : {&q.ref, &q.sen}) {
      *pt = {c * pt->x - s * pt->y + 40.0, s * pt->x + c * pt->y - 13.0};
    }
  }
  EXPECT_NEAR(rmse(p), base, 1e-9);
}

TEST(LoadGroundTruth, ControlPoints) {
  const auto dir = testing::scratch_dir("gt_points");
  testing::write_bytes(dir / "four.txt",
                       "# ref sen\n0 0 1 1\n10 0 11 1\n0 10 1 11  # trailing\n\n10 10 11 11\n");
  const GroundTruth gt = load_ground_truth(dir / "four.txt");
  ASSERT_TRUE(gt.point_based());
  const auto& cps = std::get<std::vector<ControlPoint>>(gt.truth);
  ASSERT_EQ(cps.size(), 4u);
  EXPECT_EQ(cps[2].ref, (Point2{0, 10}));
  EXPECT_EQ(cps[2].sen, (Point2{1, 11}));
  const Point2 mapped = apply(gt.model(), {6, 6});
  EXPECT_NEAR(mapped.x, 5.0, 1e-9);
  EXPECT_NEAR(mapped.y, 5.0, 1e-9);

  testing::write_bytes(dir / "three.txt", "0 0 1 1\n10 0 11 1\n0 10 1 11\n");
  EXPECT_THROW(load_ground_truth(dir / "three.txt"), Error);
  testing::write_bytes(dir / "junk.txt", "0 0 1\n10 0 11 1\n0 10 1 11\n3 3 3 3\n");
  EXPECT_THROW(load_ground_truth(dir / "junk.txt"), Error);
  EXPECT_THROW(load_ground_truth(dir / "missing.txt"), Error);
}

TEST(LoadGroundTruth, TransformFile) {
  const auto dir = testing::scratch_dir("gt_transform");
  write_transform(TransformModel::identity(), dir / "t.txt");
  const GroundTruth gt = load_ground_truth(dir / "t.txt");
  ASSERT_FALSE(gt.point_based());
  EXPECT_EQ(gt.model().matrix(), Eigen::Matrix3d::Identity());
  testing::write_bytes(dir / "short.txt", "affine\n1 0 0 0 1\n");
  EXPECT_THROW(load_ground_truth(dir / "short.txt"), Error);
}

TEST(Report, JsonFields) {
  RegistrationReport r;
  r.n_keypoints_ref = 10;
  r.n_ransac = 8;
  r.n_correct = 6;
  r.cmr = 0.75;
  r.rmse_px = 1.25;
  r.model_kind = "affine";
  r.matrix = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  r.stage_times_s = {{"match", 0.5}};
  const auto j = nlohmann::json::parse(r.to_json());
  for (const char* key : {"n_keypoints_ref", "n_keypoints_sen", "n_initial", "n_oriented",
                          "n_ransac", "n_correct", "cmr", "rmse_px", "model_kind", "matrix",
                          "stage_times_s"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["n_correct"], 6);
  EXPECT_EQ(j["matrix"].size(), 9u);
  EXPECT_EQ(j["stage_times_s"]["match"], 0.5);
  EXPECT_FALSE(nlohmann::json::parse(r.to_json(false)).contains("stage_times_s"));
  RegistrationReport none;
  EXPECT_TRUE(nlohmann::json::parse(none.to_json())["cmr"].is_null());
}

}  // namespace
}  // namespace ampiifd
