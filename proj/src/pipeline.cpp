#include "ampiifd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include "ampiifd/error.hpp"
#include "cli_options.hpp"

namespace ampiifd {
namespace {

namespace fs = std::filesystem;

class StageTimer {
 public:
  explicit StageTimer(RegistrationReport& report) : report_(report) {}

  // Runs `fn`, records its wall time under `stage` and prefixes any error
  // with the stage name.
  template <typename Fn>
  auto run(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(stage, start);
      } else {
        auto result = fn();
        record(stage, start);
        return result;
      }
    } catch (const Error& e) {
      throw Error(e.kind(), stage + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Input, stage + ": " + e.what());
    }
  }

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point start) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    report_.stage_times_s.emplace_back(stage, dt.count());
  }

  RegistrationReport& report_;
};

std::vector<KeyPoint> keypoints_of(const std::vector<DescribedKeyPoint>& features) {
  std::vector<KeyPoint> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.keypoint);
  return out;
}

std::vector<Correspondence> correspondences(std::span<const MatchPair> matches,
                                            std::span<const KeyPoint> ref,
                                            std::span<const KeyPoint> sen) {
  std::vector<Correspondence> out;
  out.reserve(matches.size());
  for (const auto& m : matches) {
    out.push_back({{ref[m.ref_index].x, ref[m.ref_index].y},
                   {sen[m.sen_index].x, sen[m.sen_index].y}});
  }
  return out;
}

void draw_line(RgbImage& img, double x0, double y0, double x1, double y1,
               const double (&color)[3]) {
  const int steps =
      static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) continue;
    std::copy(color, color + 3, img.pixel(x, y));
  }
}

}  // namespace

std::vector<KeyPoint> RegistrationResult::ref_keypoints() const {
  return keypoints_of(ref_features);
}

std::vector<KeyPoint> RegistrationResult::sen_keypoints() const {
  return keypoints_of(sen_features);
}

double corner_error(const TransformModel& a, const TransformModel& b, int width,
                    int height) {
  const Point2 corners[4] = {{0.0, 0.0},
                             {width - 1.0, 0.0},
                             {0.0, height - 1.0},
                             {width - 1.0, height - 1.0}};
  double sum = 0.0;
  for (const auto& c : corners) {
    const Point2 pa = apply(a, c);
    const Point2 pb = apply(b, c);
    sum += std::hypot(pa.x - pb.x, pa.y - pb.y);
  }
  return sum / 4.0;
}

RegistrationResult register_images(const Image& ref, const Image& sen,
                                   const PipelineConfig& config,
                                   const std::optional<GroundTruth>& gt) {
  config.validate();
  RegistrationResult result;
  RegistrationReport& report = result.report;
  StageTimer timer(report);

  const auto features = [&](const Image& img, const std::string& tag) {
    const NonlinearScaleSpace space = timer.run("scale_space_" + tag, [&] {
      return build_scale_space(img, config.scale_space);
    });
    const auto keypoints =
        timer.run("detect_" + tag, [&] { return detect(space, config.detector); });
    auto described = timer.run("describe_" + tag, [&] {
      return describe(space, keypoints, config.descriptor);
    });
    return std::pair{keypoints.size(), std::move(described)};
  };
  auto [n_ref, ref_features] = features(ref, "ref");
  auto [n_sen, sen_features] = features(sen, "sen");
  result.ref_features = std::move(ref_features);
  result.sen_features = std::move(sen_features);
  report.n_keypoints_ref = n_ref;
  report.n_keypoints_sen = n_sen;
  report.n_described_ref = result.ref_features.size();
  report.n_described_sen = result.sen_features.size();

  result.initial = timer.run("match", [&] {
    return bilateral_match(result.ref_features, result.sen_features, config.match);
  });
  report.n_initial = result.initial.size();
  if (result.initial.empty()) {
    fail(ErrorKind::NoModel, "match: no model with sufficient inliers (no initial matches)");
  }
  result.oriented = timer.run("orientation_filter", [&] {
    return orientation_filter(result.initial, config.match);
  });
  report.n_oriented = result.oriented.size();

  const auto ref_kps = result.ref_keypoints();
  const auto sen_kps = result.sen_keypoints();
  RansacResult fit = timer.run("ransac", [&] {
    try {
      return ransac(result.oriented, ref_kps, sen_kps, config.model, config.match);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Degenerate) {
        fail(ErrorKind::NoModel, std::string("no model with sufficient inliers: ") + e.what());
      }
      throw;
    }
  });
  result.inliers = std::move(fit.inliers);
  result.model = fit.model;
  report.n_ransac = result.inliers.size();
  report.unreliable = report.n_ransac < kReliableMatchCount;
  report.model_kind = std::string(to_string(result.model.kind()));
  report.matrix.resize(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) report.matrix[3 * r + c] = result.model.matrix()(r, c);

  timer.run("evaluate", [&] {
    auto aligned = correspondences(result.inliers, ref_kps, sen_kps);
    const auto raw = aligned;
    for (auto& p : aligned) p.sen = apply(result.model, p.sen);
    report.rmse_px = rmse(aligned);
    if (gt) {
      const std::size_t nc = classify_correct(raw, *gt, config.gt_tolerance);
      report.n_correct = nc;
      report.cmr = cmr(nc, report.n_ransac);
      report.gt_corner_error_px =
          corner_error(result.model, gt->model(), sen.width(), sen.height());
    }
  });
  return result;
}

RgbImage render_matches(const Image& ref, const Image& sen,
                        std::span<const MatchPair> matches,
                        std::span<const KeyPoint> ref_keypoints,
                        std::span<const KeyPoint> sen_keypoints) {
  RgbImage out(ref.width() + sen.width(), std::max(ref.height(), sen.height()));
  for (int y = 0; y < ref.height(); ++y)
    for (int x = 0; x < ref.width(); ++x) std::fill_n(out.pixel(x, y), 3, ref(x, y));
  for (int y = 0; y < sen.height(); ++y)
    for (int x = 0; x < sen.width(); ++x)
      std::fill_n(out.pixel(ref.width() + x, y), 3, sen(x, y));
  static constexpr double kLine[3] = {0.1, 1.0, 0.1};
  for (const auto& m : matches) {
    const KeyPoint& r = ref_keypoints[m.ref_index];
    const KeyPoint& s = sen_keypoints[m.sen_index];
    draw_line(out, r.x, r.y, s.x + ref.width(), s.y, kLine);
  }
  return out;
}

RegistrationReport run_register(const fs::path& ref_path, const fs::path& sen_path,
                                const PipelineConfig& config) {
  config.validate();
  RegistrationReport load_times;
  StageTimer timer(load_times);
  const Image ref = timer.run("load_ref", [&] { return load_image(ref_path); });
  const Image sen = timer.run("load_sen", [&] { return load_image(sen_path); });
  std::optional<GroundTruth> gt;
  if (config.gt_path) {
    gt = timer.run("load_gt", [&] { return load_ground_truth(*config.gt_path); });
  }
  const fs::path& out = config.output_dir;
  timer.run("output_dir", [&] { fs::create_directories(out); });

  RegistrationResult result = register_images(ref, sen, config, gt);
  RegistrationReport& report = result.report;
  report.stage_times_s.insert(report.stage_times_s.begin(),
                              load_times.stage_times_s.begin(),
                              load_times.stage_times_s.end());
  StageTimer writer(report);
  const auto ref_kps = result.ref_keypoints();
  const auto sen_kps = result.sen_keypoints();

  writer.run("write_outputs", [&] {
    {
      std::ofstream m(out / "matches.txt");
      if (!m) fail(ErrorKind::Input, "unwritable path: " + (out / "matches.txt").string());
      append_matches(m, result.initial, ref_kps, sen_kps, "initial");
      append_matches(m, result.oriented, ref_kps, sen_kps, "oriented");
      append_matches(m, result.inliers, ref_kps, sen_kps, "ransac");
    }
    write_transform(result.model, out / "transform.txt");
    const Image warped = warp_image(sen, result.model, ref.width(), ref.height());
    save_image(warped, out / "warped.png");
    save_image(checkerboard_mosaic(ref, warped, config.mosaic_tile), out / "mosaic_gray.png");
    save_image(rgb_overlay(ref, warped), out / "mosaic_rgb.png");
    save_image(render_matches(ref, sen, result.inliers, ref_kps, sen_kps),
               out / "matches_vis.png");
    if (config.debug_dumps) {
      for (const auto& [tag, img] : {std::pair{"ref", &ref}, std::pair{"sen", &sen}}) {
        const fs::path dir = out / (std::string("levels_") + tag);
        fs::create_directories(dir);
        dump_levels(build_scale_space(*img, config.scale_space), dir);
      }
      write_keypoints(ref_kps, out / "keypoints_ref.txt");
      write_keypoints(sen_kps, out / "keypoints_sen.txt");
      write_descriptors(result.ref_features, out / "descriptors_ref.bin");
      write_descriptors(result.sen_features, out / "descriptors_sen.bin");
    }
  });
  {
    std::ofstream r(out / "report.json");
    if (!r) fail(ErrorKind::Input, "unwritable path: " + (out / "report.json").string());
    r << report.to_json();
  }
  return report;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app("Multimodal image registration with adaptive multi-scale PIIFD features");
  app.require_subcommand(1);
  CLI::App* reg = app.add_subcommand("register", "register a sensed image onto a reference");
  std::string ref_path;
  std::string sen_path;
  reg->add_option("ref", ref_path, "reference image")->required();
  reg->add_option("sen", sen_path, "sensed image")->required();
  detail::CliOverrides overrides;
  detail::add_config_options(*reg, overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  }

  try {
    const PipelineConfig config = detail::resolve(*reg, overrides);
    const RegistrationReport report = run_register(ref_path, sen_path, config);
    std::cout << report.to_json();
    if (report.unreliable) {
      std::cerr << "warning: only " << report.n_ransac
                << " RANSAC inliers; the estimated model is unreliable\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::NoModel:
        return 2;
      case ErrorKind::Config:
        return 4;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace ampiifd
