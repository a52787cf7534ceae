#include "remn/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include <json.hpp>

#include "remn/metrics.hpp"

namespace remn::bench {

MemoryPolicy MemoryPolicy::parse(const std::string& text) {
  if (text == "dynamic") return {Kind::dynamic, 5};
  if (text == "unbounded") return {Kind::unbounded, 5};
  const std::string prefix = "interval:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string digits = text.substr(prefix.size());
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      const Index k = std::stoll(digits);
      if (k >= 1) return {Kind::interval, k};
    }
  }
  throw ArgumentError("unknown policy '" + text + "' (dynamic, unbounded, interval:k)");
}

std::string MemoryPolicy::name() const {
  switch (kind) {
    case Kind::dynamic: return "dynamic";
    case Kind::unbounded: return "unbounded";
    case Kind::interval: return "interval:" + std::to_string(interval);
  }
  return "dynamic";
}

PipelineConfig apply_policy(PipelineConfig cfg, const MemoryPolicy& policy) {
  switch (policy.kind) {
    case MemoryPolicy::Kind::dynamic:
      cfg.sampling.enabled = true;
      cfg.rrm.enabled = true;
      break;
    case MemoryPolicy::Kind::unbounded:
      cfg.sampling.enabled = false;
      cfg.rrm.enabled = false;
      break;
    case MemoryPolicy::Kind::interval:
      cfg.sampling.enabled = false;
      cfg.sampling.interval = policy.interval;
      cfg.rrm.enabled = false;
      break;
  }
  return cfg;
}

BenchmarkRun run_on_video(const synth::SyntheticVideo& video, const PipelineConfig& cfg,
                          std::vector<std::pair<std::string, std::string>> config_echo) {
  if (video.frames.empty()) throw ArgumentError("run_benchmark: empty video");
  if (video.frames.size() != video.masks.size()) throw ArgumentError("run_benchmark: frame/mask count mismatch");
  BenchmarkRun run;
  run.ground_truth = video.masks;
  run.frames.reserve(video.frames.size());

  Segmenter segmenter(cfg);
  const auto begin = std::chrono::steady_clock::now();
  run.frames.push_back(segmenter.start(video.frames.front(), video.masks.front()));
  for (std::size_t t = 1; t < video.frames.size(); ++t) run.frames.push_back(segmenter.step(video.frames[t]));
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();

  BenchmarkReport& r = run.report;
  for (const auto& f : run.frames) {
    run.predictions.push_back(f.mask);
    r.per_frame_latency.push_back(f.latency);
    r.peak_bank = std::max(r.peak_bank, f.bank_size);
  }
  r.j_mean = metrics::metric_j(run.predictions, run.ground_truth);
  r.f_mean = metrics::metric_f(run.predictions, run.ground_truth);
  r.jf_mean = 0.5 * (r.j_mean + r.f_mean);
  r.fps = elapsed > 0.0 ? static_cast<double>(video.frames.size()) / elapsed : 0.0;
  r.redundancy = metrics::redundancy_score(segmenter.bank());
  r.config = std::move(config_echo);
  run.final_bank = segmenter.bank();
  return run;
}

namespace {

BenchmarkRun run_with_echo(const synth::ScenarioSpec& scenario, const PipelineConfig& cfg, const std::string& policy) {
  config::RunConfig echo{cfg, scenario};
  auto entries = config::config_entries(echo);
  entries.emplace_back("policy", policy);
  return run_on_video(synth::generate_synthetic_video(scenario), cfg, std::move(entries));
}

}  // namespace

BenchmarkRun run_benchmark(const synth::ScenarioSpec& scenario, const PipelineConfig& cfg) {
  return run_with_echo(scenario, cfg, "config");
}

BenchmarkRun run_benchmark(const synth::ScenarioSpec& scenario, const PipelineConfig& cfg,
                           const MemoryPolicy& policy) {
  return run_with_echo(scenario, apply_policy(cfg, policy), policy.name());
}

std::string to_json(const BenchmarkReport& report) {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.config) config[k] = v;
  nlohmann::ordered_json j;
  j["j_mean"] = report.j_mean;
  j["f_mean"] = report.f_mean;
  j["jf_mean"] = report.jf_mean;
  j["fps"] = report.fps;
  j["peak_bank"] = report.peak_bank;
  j["redundancy"] = report.redundancy ? nlohmann::ordered_json(*report.redundancy) : nlohmann::ordered_json(nullptr);
  j["per_frame_latency"] = report.per_frame_latency;
  j["config"] = config;
  return j.dump(2) + "\n";
}

std::string to_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "row,frame,latency,j_mean,f_mean,jf_mean,fps,peak_bank,redundancy\n";
  for (std::size_t t = 0; t < report.per_frame_latency.size(); ++t) {
    out << "frame," << t << "," << report.per_frame_latency[t] << ",,,,,,\n";
  }
  out << "summary,,," << report.j_mean << "," << report.f_mean << "," << report.jf_mean << "," << report.fps << ","
      << report.peak_bank << ",";
  if (report.redundancy) out << *report.redundancy;
  out << "\n";
  return out.str();
}

}  // namespace remn::bench
