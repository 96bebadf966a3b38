#pragma once

#include <map>
#include <string>

#include <CLI11.hpp>

#include "ampiifd/pipeline.hpp"

namespace ampiifd::detail {

// Command-line values for every config key (kebab-case options) plus the
// flag shorthands.
struct CliOverrides {
  std::map<std::string, std::string> values;
  std::string config_file;
  bool debug_dumps = false;
  bool strict_paper = false;
  std::string seed;
  std::string out;
  std::string gt;
};

void add_config_options(CLI::App& app, CliOverrides& overrides);

/// Defaults, then the config file, then explicit options; validated.
PipelineConfig resolve(const CLI::App& app, const CliOverrides& overrides);

}  // namespace ampiifd::detail
