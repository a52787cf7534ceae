#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <json.hpp>
#include <random>
#include <sstream>

#include "remn/benchmark.hpp"
#include "remn/config.hpp"
#include "remn/image_io.hpp"
#include "remn/metrics.hpp"
#include "remn/synthetic.hpp"
#include "support.hpp"

using namespace remn;
namespace fs = std::filesystem;

namespace {

// Bounding box of the true pixels: {y0, x0, y1, x1}, upper bounds exclusive.
std::array<Index, 4> bbox(const BinaryMask& m) {
  Index y0 = m.rows(), x0 = m.cols(), y1 = 0, x1 = 0;
  for (Index y = 0; y < m.rows(); ++y)
    for (Index x = 0; x < m.cols(); ++x)
      if (m(y, x)) {
        y0 = std::min(y0, y);
        x0 = std::min(x0, x);
        y1 = std::max(y1, y + 1);
        x1 = std::max(x1, x + 1);
      }
  return {y0, x0, y1, x1};
}

BinaryMask color_footprint(const Frame& f, const std::array<std::uint8_t, 3>& rgb) {
  BinaryMask m(f.height, f.width);
  for (Index y = 0; y < f.height; ++y)
    for (Index x = 0; x < f.width; ++x)
      m(y, x) = f.at(y, x, 0) == rgb[0] && f.at(y, x, 1) == rgb[1] && f.at(y, x, 2) == rgb[2];
  return m;
}

std::array<std::uint8_t, 3> color_at(const Frame& f, Index y, Index x) {
  return {f.at(y, x, 0), f.at(y, x, 1), f.at(y, x, 2)};
}

// Boundary pixels listed by checking every in-image 4-neighbour pair.
std::vector<std::pair<Index, Index>> boundary_oracle(const BinaryMask& m) {
  std::vector<std::pair<Index, Index>> out;
  const int dy[] = {-1, 1, 0, 0}, dx[] = {0, 0, -1, 1};
  for (Index y = 0; y < m.rows(); ++y)
    for (Index x = 0; x < m.cols(); ++x) {
      if (!m(y, x)) continue;
      for (int k = 0; k < 4; ++k) {
        const Index yy = y + dy[k], xx = x + dx[k];
        if (yy < 0 || xx < 0 || yy >= m.rows() || xx >= m.cols()) continue;
        if (!m(yy, xx)) {
          out.emplace_back(y, x);
          break;
        }
      }
    }
  return out;
}

double matched_oracle(const std::vector<std::pair<Index, Index>>& from, const std::vector<std::pair<Index, Index>>& to,
                      double tol) {
  if (from.empty()) return 0.0;
  int hits = 0;
  for (auto [y, x] : from) {
    double best = std::numeric_limits<double>::infinity();
    for (auto [v, u] : to) best = std::min(best, std::hypot(double(y - v), double(x - u)));
    hits += best <= tol;
  }
  return double(hits) / double(from.size());
}

double f_oracle(const BinaryMask& pred, const BinaryMask& gt, double tol) {
  const auto pb = boundary_oracle(pred), gb = boundary_oracle(gt);
  if (pb.empty() && gb.empty()) return 1.0;
  if (pb.empty() || gb.empty()) return 0.0;
  const double p = matched_oracle(pb, gb, tol), r = matched_oracle(gb, pb, tol);
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

Bank bank_from_keys(const std::vector<Eigen::RowVectorXd>& pooled) {
  Bank bank;
  Index frame = 0;
  for (const auto& k : pooled) {
    memory::BankEntry<double> e;
    e.key = DenseArray<double>({1, 1, k.size()});
    e.key.matrix().row(0) = k;
    e.values.push_back(DenseArray<double>::constant({1, 1, 2}, 0.5));
    e.frame_index = frame++;
    bank.insert(std::move(e), LabelMask::Zero(16, 16));
  }
  return bank;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("remn_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("plain single frame: mask is exactly the painted square") {
  for (std::uint64_t seed : {0u, 1u, 2u, 3u}) {
    synth::ScenarioSpec spec;
    spec.frames = 1;
    spec.height = 96;
    spec.width = 128;
    spec.seed = seed;
    const auto v = synth::generate_synthetic_video(spec);
    REQUIRE(v.frames.size() == 1);
    const BinaryMask m = object_slice(v.masks[0], 1);
    const auto [y0, x0, y1, x1] = bbox(m);
    CHECK(y1 - y0 == x1 - x0);                  // square
    CHECK(m.count() == (y1 - y0) * (x1 - x0));  // filled
    CHECK(max_label(v.masks[0]) == 1);
    CHECK((color_footprint(v.frames[0], color_at(v.frames[0], y0, x0)) == m).all());
  }
}

TEST_CASE("distractor footprints are disjoint and share the target colour") {
  synth::ScenarioSpec spec;
  spec.kind = synth::ScenarioKind::distractor;
  spec.frames = 40;
  spec.height = spec.width = 128;
  spec.seed = 9;
  const auto v = synth::generate_synthetic_video(spec);
  REQUIRE(v.frames.size() == 40);
  for (std::size_t t = 0; t < v.frames.size(); ++t) {
    const BinaryMask target = object_slice(v.masks[t], 1);
    const auto [y0, x0, y1, x1] = bbox(target);
    const BinaryMask painted = color_footprint(v.frames[t], color_at(v.frames[t], y0, x0));
    const BinaryMask distractor = painted && !target;
    CHECK(((target && painted) == target).all());
    CHECK_FALSE((distractor && target).any());
    CHECK(distractor.count() == target.count());
    CHECK(max_label(v.masks[t]) == 1);
  }
}

TEST_CASE("long video replays the plain sequence") {
  synth::ScenarioSpec spec;
  spec.kind = synth::ScenarioKind::long_video;
  spec.frames = 12;
  spec.replay_factor = 3;
  spec.height = spec.width = 64;
  const auto v = synth::generate_synthetic_video(spec);
  REQUIRE(v.frames.size() == 36);
  for (std::size_t t = 0; t + 12 < v.frames.size(); ++t) {
    CHECK(v.frames[t] == v.frames[t + 12]);
    CHECK(v.masks[t] == v.masks[t + 12]);
  }
  CHECK_FALSE(v.masks[0] == v.masks[6]);  // it does move
}

TEST_CASE("synthetic videos are deterministic and validate their spec") {
  synth::ScenarioSpec spec;
  spec.kind = synth::ScenarioKind::deform;
  spec.frames = 10;
  spec.height = spec.width = 64;
  const auto a = synth::generate_synthetic_video(spec), b = synth::generate_synthetic_video(spec);
  CHECK(a.frames == b.frames);
  CHECK(a.masks == b.masks);

  synth::ScenarioSpec bad = spec;
  bad.height = 60;
  CHECK_THROWS_AS(synth::generate_synthetic_video(bad), ArgumentError);
  bad = spec;
  bad.frames = 0;
  CHECK_THROWS_AS(synth::generate_synthetic_video(bad), ArgumentError);
  CHECK_THROWS_AS(synth::parse_scenario("nope"), ArgumentError);
  CHECK(synth::parse_scenario("long") == synth::ScenarioKind::long_video);
}

TEST_CASE("metric_j examples") {
  const LabelMask gt = test::box_mask(16, 16, 2, 2, 10, 10);
  CHECK(metrics::metric_j({gt, gt, gt}, {gt, gt, gt}) == 1.0);
  CHECK(metrics::metric_j({gt, LabelMask::Zero(16, 16)}, {gt, gt}) == 0.0);

  // Two 1x2 strips overlapping in one pixel: IoU 1/3.
  LabelMask p = LabelMask::Zero(4, 4), g = LabelMask::Zero(4, 4);
  p(1, 0) = p(1, 1) = 1;
  g(1, 1) = g(1, 2) = 1;
  CHECK(metrics::metric_j({g, p}, {g, g}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // Frame 0 never counts.
  CHECK(metrics::metric_j({LabelMask::Zero(16, 16), gt}, {gt, gt}) == 1.0);
  // Losing one of two objects halves J.
  const LabelMask two = test::box_mask(16, 16, 0, 0, 4, 4, 2);
  LabelMask g2 = two;
  g2.block(10, 10, 3, 3).setConstant(1);
  LabelMask p2 = two;
  CHECK(metrics::metric_j({g2, p2}, {g2, g2}) == doctest::Approx(0.5));

  CHECK_THROWS_AS(metrics::metric_j({gt}, {gt, gt}), ArgumentError);
  CHECK_THROWS_AS(metrics::metric_j({gt, gt}, {gt, LabelMask::Zero(8, 8)}), ArgumentError);
}

TEST_CASE("boundary_f examples") {
  const LabelMask gt = test::box_mask(40, 40, 10, 10, 30, 30);
  CHECK(metrics::metric_f({gt, gt}, {gt, gt}, 1.0) == 1.0);

  // A 1-pixel shift is matched everywhere once the radius reaches 2.
  const LabelMask shifted = test::box_mask(40, 40, 10, 11, 30, 31);
  const BinaryMask a = object_slice(shifted, 1), b = object_slice(gt, 1);
  CHECK(f_oracle(a, b, 2.0) == 1.0);
  CHECK(metrics::boundary_f(a, b, 2.0) == 1.0);
  CHECK(metrics::boundary_f(a, b, 3.0) == 1.0);
  CHECK(metrics::boundary_f(a, b, 0.5) == doctest::Approx(f_oracle(a, b, 0.5)).epsilon(1e-12));

  // Displaced far beyond tolerance.
  const BinaryMask far = object_slice(test::box_mask(80, 80, 0, 0, 10, 10), 1);
  const BinaryMask away = object_slice(test::box_mask(80, 80, 60, 60, 70, 70), 1);
  CHECK(metrics::boundary_f(far, away, 3.0) == 0.0);
  CHECK(metrics::boundary_f(far, BinaryMask::Constant(80, 80, false), 3.0) == 0.0);
  CHECK(metrics::boundary_f(BinaryMask::Constant(8, 8, false), BinaryMask::Constant(8, 8, false), 1.0) == 1.0);

  CHECK(metrics::default_tolerance(384, 384) == std::ceil(0.008 * std::hypot(384.0, 384.0)));
  CHECK(metrics::default_tolerance(16, 16) == 1.0);
}

TEST_CASE("boundary_f matches a brute-force oracle on random masks") {
  Rng rng(81);
  for (int trial = 0; trial < 60; ++trial) {
    const BinaryMask a = object_slice(test::random_labels(12, 14, 1, rng), 1);
    const BinaryMask b = object_slice(test::random_labels(12, 14, 1, rng), 1);
    const double tol = rng.uniform(0.5, 3.0);
    CHECK(metrics::boundary_f(a, b, tol) == doctest::Approx(f_oracle(a, b, tol)).epsilon(1e-12));
  }
}

TEST_CASE("J and F are invariant to a paired permutation of frames") {
  Rng rng(82);
  std::vector<LabelMask> pred, gt;
  for (int t = 0; t < 8; ++t) {
    pred.push_back(test::random_labels(10, 10, 2, rng));
    gt.push_back(test::random_labels(10, 10, 2, rng));
  }
  std::vector<std::size_t> order = {0, 5, 2, 7, 1, 3, 6, 4};  // frame 0 stays first
  std::vector<LabelMask> pp, gp;
  for (auto i : order) {
    pp.push_back(pred[i]);
    gp.push_back(gt[i]);
  }
  CHECK(metrics::metric_j(pp, gp) == doctest::Approx(metrics::metric_j(pred, gt)).epsilon(1e-12));
  CHECK(metrics::metric_f(pp, gp, 1.5) == doctest::Approx(metrics::metric_f(pred, gt, 1.5)).epsilon(1e-12));
  CHECK(metrics::metric_j(pred, pred) == 1.0);
  CHECK(metrics::metric_f(gt, gt) == 1.0);
}

TEST_CASE("redundancy_score examples") {
  Eigen::RowVectorXd k(3);
  k << 0.3, -1.0, 2.0;
  CHECK(*metrics::redundancy_score(bank_from_keys({k, k, k})) == doctest::Approx(1.0));

  Eigen::RowVectorXd e1(3), e2(3);
  e1 << 1, 0, 0;
  e2 << 0, 2, 0;
  CHECK(*metrics::redundancy_score(bank_from_keys({e1, e2})) == doctest::Approx(0.0));

  CHECK_FALSE(metrics::redundancy_score(bank_from_keys({k})).has_value());
  CHECK_FALSE(metrics::redundancy_score(Bank{}).has_value());
}

TEST_CASE("redundancy_score matches a pairwise loop over pooled keys") {
  Rng rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    Bank bank;
    std::vector<Eigen::VectorXd> pooled;
    for (Index t = 0; t < 4; ++t) {
      memory::BankEntry<double> e;
      e.key = test::random_array({3, 2, 5}, rng);
      e.values.push_back(test::random_array({3, 2, 2}, rng));
      e.frame_index = t;
      Eigen::VectorXd p = Eigen::VectorXd::Zero(5);
      for (Index y = 0; y < 3; ++y)
        for (Index x = 0; x < 2; ++x)
          for (Index c = 0; c < 5; ++c) p(c) += e.key(y, x, c) / 6.0;
      pooled.push_back(p);
      bank.insert(std::move(e), LabelMask::Zero(48, 32));
    }
    double sum = 0;
    int pairs = 0;
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = a + 1; b < 4; ++b, ++pairs) sum += pooled[a].dot(pooled[b]) / (pooled[a].norm() * pooled[b].norm());
    const double got = *metrics::redundancy_score(bank);
    CHECK(std::abs(got - sum / pairs) < 1e-9);
    CHECK(got >= -1.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("config parsing, defaults and round trip") {
  const auto defaults = config::parse_config("");
  CHECK(defaults.pipeline.sampling.config.sigma == doctest::Approx(0.1));
  CHECK(defaults.pipeline.rrm.capacity == 8);

  const std::string text =
      "# comment\n"
      "asm.sigma = 0.25\n"
      "\n"
      "rrm.capacity=16   # trailing comment\n"
      "frm.enabled=false\n"
      "scenario.name=distractor\n"
      "scenario.size=128x64\n"
      "encoder.key_norm=4.5\n";
  const auto cfg = config::parse_config(text);
  CHECK(cfg.pipeline.sampling.config.sigma == 0.25);
  CHECK(cfg.pipeline.rrm.capacity == 16);
  CHECK_FALSE(cfg.pipeline.frm.enabled);
  CHECK(cfg.scenario.kind == synth::ScenarioKind::distractor);
  CHECK(cfg.scenario.height == 128);
  CHECK(cfg.scenario.width == 64);
  CHECK(cfg.pipeline.encoder.key_norm == 4.5);

  const auto again = config::parse_config(config::format_config(cfg));
  CHECK(config::config_entries(again) == config::config_entries(cfg));

  CHECK_THROWS_AS(config::parse_config("asm.simga=0.2\n"), ArgumentError);
  CHECK_THROWS_AS(config::parse_config("asm.sigma\n"), ArgumentError);
  CHECK_THROWS_AS(config::parse_config("asm.sigma=abc\n"), ArgumentError);
  CHECK_THROWS_AS(config::parse_config("asm.sigma=1.5\n"), ArgumentError);
  CHECK_THROWS_AS(config::parse_config("frm.enabled=maybe\n"), ArgumentError);
  CHECK_THROWS_AS(config::parse_config("scenario.size=100x100\n"), ArgumentError);
  CHECK_THROWS_AS(config::load_config("/nonexistent/remn.cfg"), ArgumentError);
}

TEST_CASE("PPM and PGM round trip") {
  const fs::path dir = scratch_dir("io");
  Rng rng(84);
  Frame f(32, 48);
  for (auto& b : f.rgb) b = static_cast<std::uint8_t>(rng.integer(0, 255));
  io::write_ppm(dir / "a.ppm", f);
  CHECK(io::read_ppm(dir / "a.ppm") == f);

  const LabelMask m = test::random_labels(32, 48, 3, rng);
  io::write_pgm(dir / "a.pgm", m);
  CHECK(io::read_pgm(dir / "a.pgm") == m);

  CHECK(io::numbered_name(42, "ppm") == "000042.ppm");
  io::write_frames(dir / "frames", {f, f, f});
  io::write_masks(dir / "masks", {m, m});
  const auto listed = io::list_numbered(dir / "frames", "ppm");
  REQUIRE(listed.size() == 3);
  CHECK(listed[2].filename() == "000002.ppm");
  CHECK(io::read_frames(dir / "frames").size() == 3);
  CHECK(io::read_masks(dir / "masks") == std::vector<LabelMask>{m, m});

  CHECK_THROWS_AS(io::read_ppm(dir / "missing.ppm"), ArgumentError);
  CHECK_THROWS_AS(io::read_ppm(dir / "a.pgm"), ArgumentError);  // wrong magic
  {
    std::ofstream out(dir / "short.ppm", std::ios::binary);
    out << "P6\n4 4\n255\n" << std::string(10, 'x');
  }
  CHECK_THROWS_AS(io::read_ppm(dir / "short.ppm"), ArgumentError);
  {
    std::ofstream out(dir / "deep.pgm", std::ios::binary);
    out << "P5\n2 2\n65535\n" << std::string(8, '\0');
  }
  CHECK_THROWS_AS(io::read_pgm(dir / "deep.pgm"), ArgumentError);
  CHECK_THROWS_AS(io::read_frames(dir / "nowhere"), ArgumentError);
  fs::remove_all(dir);
}

TEST_CASE("memory policy parsing and mapping") {
  using bench::MemoryPolicy;
  CHECK(MemoryPolicy::parse("dynamic").kind == MemoryPolicy::Kind::dynamic);
  CHECK(MemoryPolicy::parse("unbounded").kind == MemoryPolicy::Kind::unbounded);
  const auto iv = MemoryPolicy::parse("interval:7");
  CHECK(iv.kind == MemoryPolicy::Kind::interval);
  CHECK(iv.interval == 7);
  CHECK(iv.name() == "interval:7");
  CHECK_THROWS_AS(MemoryPolicy::parse("interval:0"), ArgumentError);
  CHECK_THROWS_AS(MemoryPolicy::parse("interval:x"), ArgumentError);
  CHECK_THROWS_AS(MemoryPolicy::parse("sometimes"), ArgumentError);

  const PipelineConfig base;
  const auto dyn = bench::apply_policy(base, MemoryPolicy::parse("dynamic"));
  CHECK(dyn.sampling.enabled);
  CHECK(dyn.rrm.enabled);
  const auto unb = bench::apply_policy(base, MemoryPolicy::parse("unbounded"));
  CHECK_FALSE(unb.sampling.enabled);
  CHECK_FALSE(unb.rrm.enabled);
  const auto fixed = bench::apply_policy(base, iv);
  CHECK_FALSE(fixed.sampling.enabled);
  CHECK_FALSE(fixed.rrm.enabled);
  CHECK(fixed.sampling.interval == 7);
}

TEST_CASE("benchmark report fields") {
  synth::ScenarioSpec spec;
  spec.frames = 12;
  spec.height = spec.width = 96;
  const auto run = bench::run_benchmark(spec, PipelineConfig{}, bench::MemoryPolicy::parse("unbounded"));
  const auto& r = run.report;
  CHECK(std::abs(r.jf_mean - 0.5 * (r.j_mean + r.f_mean)) < 1e-9);
  CHECK(r.j_mean >= 0.0);
  CHECK(r.j_mean <= 1.0);
  CHECK(r.f_mean >= 0.0);
  CHECK(r.f_mean <= 1.0);
  CHECK(r.fps > 0.0);
  CHECK(r.per_frame_latency.size() == 12);
  CHECK(r.peak_bank == 3);  // frames 0, 5, 10
  REQUIRE(r.redundancy.has_value());
  CHECK(*r.redundancy >= -1.0);
  CHECK(*r.redundancy <= 1.0);
  CHECK(r.j_mean == doctest::Approx(metrics::metric_j(run.predictions, run.ground_truth)).epsilon(1e-12));

  // Determinism, timing aside.
  const auto again = bench::run_benchmark(spec, PipelineConfig{}, bench::MemoryPolicy::parse("unbounded"));
  CHECK(again.report.j_mean == r.j_mean);
  CHECK(again.report.f_mean == r.f_mean);
  CHECK(again.report.peak_bank == r.peak_bank);
  CHECK(again.report.redundancy == r.redundancy);
  CHECK(again.predictions == run.predictions);
}

TEST_CASE("static plain video under the dynamic policy keeps one entry") {
  synth::ScenarioSpec spec;
  spec.frames = 1;
  const auto first = synth::generate_synthetic_video(spec);
  synth::SyntheticVideo still;
  still.frames.assign(20, first.frames[0]);
  still.masks.assign(20, first.masks[0]);
  const auto cfg = bench::apply_policy(PipelineConfig{}, bench::MemoryPolicy::parse("dynamic"));
  const auto run = bench::run_on_video(still, cfg, {});
  CHECK(run.report.peak_bank == 1);
  CHECK_FALSE(run.report.redundancy.has_value());
}

TEST_CASE("JSON and CSV reports") {
  bench::BenchmarkReport r;
  r.j_mean = 0.75;
  r.f_mean = 0.25;
  r.jf_mean = 0.5;
  r.fps = 12.5;
  r.peak_bank = 8;
  r.redundancy = 0.125;
  r.per_frame_latency = {0.01, 0.02, 0.03};
  r.config = {{"asm.sigma", "0.1"}, {"policy", "dynamic"}};

  const auto j = nlohmann::json::parse(bench::to_json(r));
  std::vector<std::string> keys;
  for (const auto& item : j.items()) keys.push_back(item.key());
  std::sort(keys.begin(), keys.end());
  CHECK(keys == std::vector<std::string>{"config", "f_mean", "fps", "j_mean", "jf_mean", "peak_bank",
                                         "per_frame_latency", "redundancy"});
  CHECK(j["j_mean"] == 0.75);
  CHECK(j["peak_bank"] == 8);
  CHECK(j["redundancy"] == 0.125);
  CHECK(j["per_frame_latency"].size() == 3);
  CHECK(j["config"]["policy"] == "dynamic");

  r.redundancy.reset();
  CHECK(nlohmann::json::parse(bench::to_json(r))["redundancy"].is_null());

  std::istringstream csv(bench::to_csv(r));
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0].rfind("row,frame,latency", 0) == 0);
  CHECK(lines[1].rfind("frame,0,", 0) == 0);
  CHECK(lines[4].rfind("summary,", 0) == 0);
}
