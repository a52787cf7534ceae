#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "remn/config.hpp"
#include "remn/pipeline.hpp"
#include "remn/synthetic.hpp"

namespace remn::bench {

/// Memory policy arm of a benchmark run.
///   dynamic    adaptive sampling + bounded, compressed bank
///   unbounded  fixed-interval sampling, bank never compressed
///   interval:k fixed sampling every k frames, bank never compressed
struct MemoryPolicy {
  enum class Kind { dynamic, unbounded, interval };
  Kind kind = Kind::dynamic;
  Index interval = 5;

  static MemoryPolicy parse(const std::string& text);
  std::string name() const;
};

PipelineConfig apply_policy(PipelineConfig cfg, const MemoryPolicy& policy);

struct BenchmarkReport {
  double j_mean = 0;
  double f_mean = 0;
  double jf_mean = 0;
  double fps = 0;
  Index peak_bank = 0;
  std::optional<double> redundancy;
  std::vector<double> per_frame_latency;
  std::vector<std::pair<std::string, std::string>> config;
};

struct BenchmarkRun {
  BenchmarkReport report;
  std::vector<LabelMask> predictions;
  std::vector<LabelMask> ground_truth;
  std::vector<FrameResult> frames;
  Bank final_bank;
};

/// Synthesizes the scenario and segments it with `cfg` as given.
BenchmarkRun run_benchmark(const synth::ScenarioSpec& scenario, const PipelineConfig& cfg);

/// Same, after mapping `policy` onto the sampling and compression switches.
BenchmarkRun run_benchmark(const synth::ScenarioSpec& scenario, const PipelineConfig& cfg,
                           const MemoryPolicy& policy);

/// Segments already-loaded frames; the first ground-truth mask seeds memory and
/// the full ground-truth sequence is used for J and F.
BenchmarkRun run_on_video(const synth::SyntheticVideo& video, const PipelineConfig& cfg,
                          std::vector<std::pair<std::string, std::string>> config_echo);

std::string to_json(const BenchmarkReport& report);
std::string to_csv(const BenchmarkReport& report);

}  // namespace remn::bench
