#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <string_view>

#include "ampiifd/error.hpp"
#include "ampiifd/pipeline.hpp"
#include "cli_options.hpp"

namespace ampiifd {
namespace {

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(ErrorKind::Config, key + ": cannot parse value '" + value + "'");
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

long long to_integer(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end) bad_value(key, value);
  return v;
}

int to_int(const std::string& key, const std::string& value) {
  const long long v = to_integer(key, value);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    bad_value(key, value);
  }
  return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    const auto real = [&t](const std::string& key, auto member) {
      t[key] = [key, member](PipelineConfig& c, const std::string& v) {
        member(c) = to_double(key, v);
      };
    };
    const auto integer = [&t](const std::string& key, auto member) {
      t[key] = [key, member](PipelineConfig& c, const std::string& v) {
        member(c) = to_int(key, v);
      };
    };
    const auto boolean = [&t](const std::string& key, auto member) {
      t[key] = [key, member](PipelineConfig& c, const std::string& v) {
        member(c) = to_bool(key, v);
      };
    };
    integer("num_octaves", [](PipelineConfig& c) -> int& { return c.scale_space.num_octaves; });
    integer("num_sublevels", [](PipelineConfig& c) -> int& { return c.scale_space.num_sublevels; });
    real("base_sigma", [](PipelineConfig& c) -> double& { return c.scale_space.base_sigma; });
    real("contrast_percentile",
         [](PipelineConfig& c) -> double& { return c.scale_space.contrast_percentile; });
    real("gradient_sigma", [](PipelineConfig& c) -> double& { return c.scale_space.gradient_sigma; });
    integer("aos_substeps", [](PipelineConfig& c) -> int& { return c.scale_space.aos_substeps; });
    real("response_threshold",
         [](PipelineConfig& c) -> double& { return c.detector.response_threshold; });
    real("offset", [](PipelineConfig& c) -> double& { return c.detector.offset; });
    integer("max_keypoints", [](PipelineConfig& c) -> int& { return c.detector.max_keypoints; });
    t["region_multiplier"] = [](PipelineConfig& c, const std::string& v) {
      const double k = to_double("region_multiplier", v);
      c.detector.region_multiplier = k;
      c.descriptor.region_multiplier = k;
    };
    real("combine_scale", [](PipelineConfig& c) -> double& { return c.descriptor.combine_scale; });
    integer("min_region", [](PipelineConfig& c) -> int& { return c.descriptor.min_region; });
    boolean("clamp_descriptor", [](PipelineConfig& c) -> bool& { return c.descriptor.clamp; });
    integer("bbf_max_checks", [](PipelineConfig& c) -> int& { return c.match.bbf_max_checks; });
    real("bin_width", [](PipelineConfig& c) -> double& { return c.match.bin_width; });
    boolean("include_adjacent_bins",
            [](PipelineConfig& c) -> bool& { return c.match.include_adjacent_bins; });
    real("ransac_threshold", [](PipelineConfig& c) -> double& { return c.match.ransac_threshold; });
    integer("ransac_iterations",
            [](PipelineConfig& c) -> int& { return c.match.ransac_iterations; });
    t["ransac_seed"] = [](PipelineConfig& c, const std::string& v) {
      const long long seed = to_integer("ransac_seed", v);
      if (seed < 0) bad_value("ransac_seed", v);
      c.match.ransac_seed = static_cast<std::uint64_t>(seed);
    };
    real("ratio_threshold", [](PipelineConfig& c) -> double& { return c.match.ratio_threshold; });
    boolean("ratio_test", [](PipelineConfig& c) -> bool& { return c.match.use_ratio_test; });
    t["model"] = [](PipelineConfig& c, const std::string& v) { c.model = parse_model_kind(v); };
    t["output_dir"] = [](PipelineConfig& c, const std::string& v) { c.output_dir = v; };
    t["gt"] = [](PipelineConfig& c, const std::string& v) { c.gt_path = v; };
    real("gt_tolerance", [](PipelineConfig& c) -> double& { return c.gt_tolerance; });
    integer("mosaic_tile", [](PipelineConfig& c) -> int& { return c.mosaic_tile; });
    boolean("debug_dumps", [](PipelineConfig& c) -> bool& { return c.debug_dumps; });
    t["strict_paper"] = [](PipelineConfig& c, const std::string& v) {
      c.strict_paper = to_bool("strict_paper", v);
      if (c.strict_paper) {
        c.match.use_ratio_test = false;
        c.descriptor.clamp = false;
      }
    };
    return t;
  }();
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string kebab(std::string key) {
  for (char& c : key) c = c == '_' ? '-' : c;
  return key;
}

}  // namespace

void PipelineConfig::validate() const {
  scale_space.validate();
  detector.validate();
  descriptor.validate();
  match.validate();
  if (!(gt_tolerance >= 0.0)) fail(ErrorKind::Config, "gt_tolerance: must be >= 0");
  if (mosaic_tile < 1) fail(ErrorKind::Config, "mosaic_tile: must be >= 1");
}

void apply_setting(PipelineConfig& config, const std::string& key,
                   const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) fail(ErrorKind::Config, "unknown key: " + key);
  it->second(config, value);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "config: unreadable file " + path.string());
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Config, "config: line " + std::to_string(line_no) +
                                  " is not of the form key = value");
    }
    apply_setting(config, trim(std::string_view(line).substr(0, eq)),
                  trim(std::string_view(line).substr(eq + 1)));
  }
}

namespace detail {

void add_config_options(CLI::App& app, CliOverrides& o) {
  for (const auto& key : config_keys()) {
    if (key == "debug_dumps" || key == "strict_paper" || key == "output_dir" ||
        key == "ransac_seed" || key == "gt") {
      continue;
    }
    app.add_option("--" + kebab(key), o.values[key]);
  }
  app.add_option("--config", o.config_file, "plain-text key = value file");
  app.add_option("--seed", o.seed, "RANSAC seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--gt", o.gt, "ground truth: transform file or control points");
  app.add_flag("--debug-dumps", o.debug_dumps, "write scale-space levels and features");
  app.add_flag("--strict-paper", o.strict_paper,
               "disable the ratio test and descriptor clamping");
}

PipelineConfig resolve(const CLI::App& app, const CliOverrides& o) {
  PipelineConfig config;
  if (!o.config_file.empty()) apply_config_file(config, o.config_file);
  for (const auto& [key, value] : o.values) {
    if (app.count("--" + kebab(key)) > 0) apply_setting(config, key, value);
  }
  if (app.count("--seed") > 0) apply_setting(config, "ransac_seed", o.seed);
  if (app.count("--out") > 0) config.output_dir = o.out;
  if (app.count("--gt") > 0) config.gt_path = o.gt;
  if (o.debug_dumps) config.debug_dumps = true;
  if (o.strict_paper) apply_setting(config, "strict_paper", "true");
  config.validate();
  return config;
}

}  // namespace detail

PipelineConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app("ampiifd configuration");
  detail::CliOverrides overrides;
  detail::add_config_options(app, overrides);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    fail(ErrorKind::Config, std::string("unknown key or bad value: ") + e.what());
  }
  return detail::resolve(app, overrides);
}

}  // namespace ampiifd
