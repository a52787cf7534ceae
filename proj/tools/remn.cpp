// remn: synthetic video generation, benchmark runs and mask evaluation.
//
//   remn synth --scenario plain --frames 60 --size 384x384 --seed 0 --out data/
//   remn run --config run.cfg --policy dynamic --report json --out results/
//   remn eval --pred results/pred --gt data/masks
//
// Exit codes: 0 success, 2 argument errors, 3 state errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "remn/benchmark.hpp"
#include "remn/config.hpp"
#include "remn/image_io.hpp"
#include "remn/metrics.hpp"
#include "remn/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kArgumentError = 2;
constexpr int kStateError = 3;

std::pair<remn::Index, remn::Index> parse_size(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x != std::string::npos) return {std::stoll(text.substr(0, x)), std::stoll(text.substr(x + 1))};
    const auto n = std::stoll(text);
    return {n, n};
  } catch (const std::exception&) {
    throw remn::ArgumentError("--size expects HxW, got '" + text + "'");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw remn::ArgumentError("cannot write " + path.string());
  out << text;
}

int cmd_synth(const std::string& scenario, remn::Index frames, const std::string& size, std::uint64_t seed,
              remn::Index replay, const fs::path& out) {
  remn::synth::ScenarioSpec spec;
  spec.kind = remn::synth::parse_scenario(scenario);
  spec.frames = frames;
  std::tie(spec.height, spec.width) = parse_size(size);
  spec.seed = seed;
  spec.replay_factor = replay;
  const auto video = remn::synth::generate_synthetic_video(spec);
  remn::io::write_frames(out / "frames", video.frames);
  remn::io::write_masks(out / "masks", video.masks);
  std::cout << "wrote " << video.frames.size() << " frames to " << out.string() << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& policy, bool no_frm, bool no_asm,
            bool no_rrm, const std::string& report_kind, const std::optional<std::string>& out) {
  if (report_kind != "json" && report_kind != "csv") throw remn::ArgumentError("--report must be json or csv");
  remn::config::RunConfig cfg =
      config_path.empty() ? remn::config::parse_config("") : remn::config::load_config(config_path);

  std::string policy_name = "config";
  if (policy) {
    const auto parsed = remn::bench::MemoryPolicy::parse(*policy);
    cfg.pipeline = remn::bench::apply_policy(cfg.pipeline, parsed);
    policy_name = parsed.name();
  }
  if (no_frm) cfg.pipeline.frm.enabled = false;
  if (no_asm) cfg.pipeline.sampling.enabled = false;
  if (no_rrm) cfg.pipeline.rrm.enabled = false;

  auto echo = remn::config::config_entries(cfg);
  echo.emplace_back("policy", policy_name);
  const auto video = remn::synth::generate_synthetic_video(cfg.scenario);
  const auto run = remn::bench::run_on_video(video, cfg.pipeline, std::move(echo));
  const std::string text =
      report_kind == "json" ? remn::bench::to_json(run.report) : remn::bench::to_csv(run.report);
  if (out) {
    const fs::path dir(*out);
    fs::create_directories(dir);
    write_text(dir / ("report." + report_kind), text);
    remn::io::write_masks(dir / "pred", run.predictions);
    remn::io::write_masks(dir / "gt", run.ground_truth);
    std::cout << "report written to " << (dir / ("report." + report_kind)).string() << "\n";
  } else {
    std::cout << text;
  }
  return 0;
}

int cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir, double tolerance) {
  const auto pred = remn::io::read_masks(pred_dir);
  const auto gt = remn::io::read_masks(gt_dir);
  if (gt.empty()) throw remn::ArgumentError("no ground-truth masks in " + gt_dir.string());
  const double j = remn::metrics::metric_j(pred, gt);
  const double f = remn::metrics::metric_f(pred, gt, tolerance);
  nlohmann::ordered_json out;
  out["frames"] = gt.size();
  out["j_mean"] = j;
  out["f_mean"] = f;
  out["jf_mean"] = 0.5 * (j + f);
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-network video object segmentation benchmark"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Write a synthetic scenario as PPM frames and PGM masks");
  std::string scenario = "plain", size = "384x384", synth_out;
  remn::Index frames = 60, replay = 1;
  std::uint64_t seed = 0;
  synth->add_option("--scenario", scenario, "plain | distractor | deform | long")->capture_default_str();
  synth->add_option("--frames", frames, "Frame count (per replay for long)")->capture_default_str();
  synth->add_option("--size", size, "Frame size HxW, multiples of 16")->capture_default_str();
  synth->add_option("--seed", seed, "Scenario seed")->capture_default_str();
  synth->add_option("--replay", replay, "Replay factor for the long scenario")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Run the segmentation benchmark on a synthetic scenario");
  std::string config_path, report_kind = "json";
  std::optional<std::string> policy, run_out;
  bool no_frm = false, no_asm = false, no_rrm = false;
  run->add_option("--config", config_path, "key=value config file (defaults when omitted)");
  run->add_option("--policy", policy, "dynamic | unbounded | interval:k");
  run->add_flag("--no-frm", no_frm, "Disable foreground reinforcement");
  run->add_flag("--no-asm", no_asm, "Replace adaptive sampling by fixed-interval sampling");
  run->add_flag("--no-rrm", no_rrm, "Disable bank compression (unbounded memory)");
  run->add_option("--report", report_kind, "json | csv")->capture_default_str();
  run->add_option("--out", run_out, "Directory for the report and predicted masks (stdout when omitted)");

  auto* eval = app.add_subcommand("eval", "Compute J and F between two mask directories");
  std::string pred_dir, gt_dir;
  double tolerance = 0.0;
  eval->add_option("--pred", pred_dir, "Predicted PGM masks")->required();
  eval->add_option("--gt", gt_dir, "Ground-truth PGM masks")->required();
  eval->add_option("--tolerance", tolerance, "Boundary tolerance in pixels (default 0.8% of the diagonal)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kArgumentError;
  }

  try {
    if (*synth) return cmd_synth(scenario, frames, size, seed, replay, synth_out);
    if (*run) return cmd_run(config_path, policy, no_frm, no_asm, no_rrm, report_kind, run_out);
    if (*eval) return cmd_eval(pred_dir, gt_dir, tolerance);
  } catch (const remn::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kArgumentError;
  } catch (const remn::StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStateError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kArgumentError;
  }
  return kArgumentError;
}
