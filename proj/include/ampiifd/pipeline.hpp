#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ampiifd/descriptor.hpp"
#include "ampiifd/detector.hpp"
#include "ampiifd/evaluation.hpp"
#include "ampiifd/matching.hpp"
#include "ampiifd/scale_space.hpp"
#include "ampiifd/transform.hpp"

namespace ampiifd {

struct PipelineConfig {
  ScaleSpaceParams scale_space;
  DetectorParams detector;
  DescriptorParams descriptor;
  MatchParams match;
  ModelKind model = ModelKind::Affine;
  std::filesystem::path output_dir = "ampiifd_out";
  std::optional<std::filesystem::path> gt_path;
  double gt_tolerance = 3.0;
  int mosaic_tile = 64;
  bool debug_dumps = false;
  bool strict_paper = false;  // no ratio test, no descriptor clamping

  /// Checks every component invariant; throws Error(Config).
  void validate() const;
};

/// Applies one `key = value` setting (snake_case key). Throws Error(Config)
/// for unknown keys or unparsable values.
void apply_setting(PipelineConfig& config, const std::string& key,
                   const std::string& value);

/// Every key accepted by apply_setting.
const std::vector<std::string>& config_keys();

/// Reads a plain-text `key = value` file ('#' comments) on top of `config`.
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// Option tokens such as {"--offset", "2.0", "--config", "file.cfg"}.
/// Precedence: command line > config file > defaults.
PipelineConfig parse_config(const std::vector<std::string>& args);

/// Everything computed by one registration, before any file is written.
struct RegistrationResult {
  std::vector<DescribedKeyPoint> ref_features;
  std::vector<DescribedKeyPoint> sen_features;
  std::vector<MatchPair> initial;
  std::vector<MatchPair> oriented;
  std::vector<MatchPair> inliers;
  TransformModel model;  // sensed -> reference
  RegistrationReport report;

  std::vector<KeyPoint> ref_keypoints() const;
  std::vector<KeyPoint> sen_keypoints() const;
};

/// Runs detection, description, matching and fitting in memory. Errors carry
/// the failing stage name as a prefix.
RegistrationResult register_images(const Image& ref, const Image& sen,
                                   const PipelineConfig& config,
                                   const std::optional<GroundTruth>& gt = std::nullopt);

/// File-level driver: loads both images, registers them and writes
/// matches.txt, transform.txt, warped.png, mosaic_gray.png, mosaic_rgb.png,
/// matches_vis.png and report.json into config.output_dir.
RegistrationReport run_register(const std::filesystem::path& ref_path,
                                const std::filesystem::path& sen_path,
                                const PipelineConfig& config);

/// Side-by-side rendering with inlier correspondences drawn as lines.
RgbImage render_matches(const Image& ref, const Image& sen,
                        std::span<const MatchPair> matches,
                        std::span<const KeyPoint> ref_keypoints,
                        std::span<const KeyPoint> sen_keypoints);

/// Mean distance between the images of the sensed frame's four corners
/// under two models.
double corner_error(const TransformModel& a, const TransformModel& b, int width,
                    int height);

/// Command-line entry point; returns the process exit code
/// (0 ok, 2 no model, 3 input error, 4 config error).
int run_cli(int argc, const char* const* argv);

}  // namespace ampiifd
