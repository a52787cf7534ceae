#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "remn/pipeline.hpp"
#include "remn/synthetic.hpp"

// Flat key=value run configuration. Blank lines and '#' comments are ignored,
// unknown keys are rejected, and every key falls back to its default.

namespace remn::config {

struct RunConfig {
  PipelineConfig pipeline;
  synth::ScenarioSpec scenario;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its effective value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

/// Inverse of parse_config.
std::string format_config(const RunConfig& cfg);

std::string format_real(double value);

}  // namespace remn::config
