#include "remn/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace remn::config {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

Index parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ArgumentError(key + ": expected an integer, got '" + v + "'");
  return static_cast<Index>(out);
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  unsigned long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ArgumentError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ArgumentError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ArgumentError(key + ": expected true or false, got '" + v + "'");
}

// "HxW", or a single number for a square.
std::pair<Index, Index> parse_extent_pair(const std::string& key, const std::string& v) {
  const auto x = v.find('x');
  if (x == std::string::npos) {
    const Index n = parse_int(key, v);
    return {n, n};
  }
  return {parse_int(key, v.substr(0, x)), parse_int(key, v.substr(x + 1))};
}

std::string b2s(bool b) { return b ? "true" : "false"; }
std::string i2s(Index i) { return std::to_string(i); }
std::string u2s(std::uint64_t u) { return std::to_string(u); }

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"pipeline.seed", [](RunConfig& c, const std::string& v) { c.pipeline.seed = parse_seed("pipeline.seed", v); },
       [](const RunConfig& c) { return u2s(c.pipeline.seed); }},
      {"pipeline.key_channels",
       [](RunConfig& c, const std::string& v) { c.pipeline.key_channels = parse_int("pipeline.key_channels", v); },
       [](const RunConfig& c) { return i2s(c.pipeline.key_channels); }},
      {"pipeline.value_channels",
       [](RunConfig& c, const std::string& v) { c.pipeline.value_channels = parse_int("pipeline.value_channels", v); },
       [](const RunConfig& c) { return i2s(c.pipeline.value_channels); }},
      {"pipeline.max_objects",
       [](RunConfig& c, const std::string& v) { c.pipeline.max_objects = parse_int("pipeline.max_objects", v); },
       [](const RunConfig& c) { return i2s(c.pipeline.max_objects); }},
      {"pipeline.store_raw_key",
       [](RunConfig& c, const std::string& v) { c.pipeline.store_raw_key = parse_bool("pipeline.store_raw_key", v); },
       [](const RunConfig& c) { return b2s(c.pipeline.store_raw_key); }},
      {"encoder.color_gain",
       [](RunConfig& c, const std::string& v) { c.pipeline.encoder.color_gain = parse_real("encoder.color_gain", v); },
       [](const RunConfig& c) { return format_real(c.pipeline.encoder.color_gain); }},
      {"encoder.position_gain",
       [](RunConfig& c, const std::string& v) {
         c.pipeline.encoder.position_gain = parse_real("encoder.position_gain", v);
       },
       [](const RunConfig& c) { return format_real(c.pipeline.encoder.position_gain); }},
      {"encoder.key_norm",
       [](RunConfig& c, const std::string& v) { c.pipeline.encoder.key_norm = parse_real("encoder.key_norm", v); },
       [](const RunConfig& c) { return format_real(c.pipeline.encoder.key_norm); }},
      {"decoder.threshold",
       [](RunConfig& c, const std::string& v) { c.pipeline.decoder.threshold = parse_real("decoder.threshold", v); },
       [](const RunConfig& c) { return format_real(c.pipeline.decoder.threshold); }},
      {"frm.enabled", [](RunConfig& c, const std::string& v) { c.pipeline.frm.enabled = parse_bool("frm.enabled", v); },
       [](const RunConfig& c) { return b2s(c.pipeline.frm.enabled); }},
      {"frm.kernel",
       [](RunConfig& c, const std::string& v) {
         std::tie(c.pipeline.frm.kernel_height, c.pipeline.frm.kernel_width) = parse_extent_pair("frm.kernel", v);
       },
       [](const RunConfig& c) { return i2s(c.pipeline.frm.kernel_height) + "x" + i2s(c.pipeline.frm.kernel_width); }},
      {"frm.seed", [](RunConfig& c, const std::string& v) { c.pipeline.frm.seed = parse_seed("frm.seed", v); },
       [](const RunConfig& c) { return u2s(c.pipeline.frm.seed); }},
      {"frm.weight_scale",
       [](RunConfig& c, const std::string& v) { c.pipeline.frm.weight_scale = parse_real("frm.weight_scale", v); },
       [](const RunConfig& c) { return format_real(c.pipeline.frm.weight_scale); }},
      {"frm.center_bias",
       [](RunConfig& c, const std::string& v) { c.pipeline.frm.center_bias = parse_real("frm.center_bias", v); },
       [](const RunConfig& c) { return format_real(c.pipeline.frm.center_bias); }},
      {"asm.enabled",
       [](RunConfig& c, const std::string& v) { c.pipeline.sampling.enabled = parse_bool("asm.enabled", v); },
       [](const RunConfig& c) { return b2s(c.pipeline.sampling.enabled); }},
      {"asm.sigma",
       [](RunConfig& c, const std::string& v) { c.pipeline.sampling.config.sigma = parse_real("asm.sigma", v); },
       [](const RunConfig& c) { return format_real(c.pipeline.sampling.config.sigma); }},
      {"asm.interval",
       [](RunConfig& c, const std::string& v) { c.pipeline.sampling.interval = parse_int("asm.interval", v); },
       [](const RunConfig& c) { return i2s(c.pipeline.sampling.interval); }},
      {"rrm.enabled", [](RunConfig& c, const std::string& v) { c.pipeline.rrm.enabled = parse_bool("rrm.enabled", v); },
       [](const RunConfig& c) { return b2s(c.pipeline.rrm.enabled); }},
      {"rrm.capacity",
       [](RunConfig& c, const std::string& v) { c.pipeline.rrm.capacity = parse_int("rrm.capacity", v); },
       [](const RunConfig& c) { return i2s(c.pipeline.rrm.capacity); }},
      {"rrm.policies",
       [](RunConfig& c, const std::string& v) { c.pipeline.rrm.policies = parse_int("rrm.policies", v); },
       [](const RunConfig& c) { return i2s(c.pipeline.rrm.policies); }},
      {"rrm.hidden", [](RunConfig& c, const std::string& v) { c.pipeline.rrm.hidden = parse_int("rrm.hidden", v); },
       [](const RunConfig& c) { return i2s(c.pipeline.rrm.hidden); }},
      {"rrm.seed", [](RunConfig& c, const std::string& v) { c.pipeline.rrm.seed = parse_seed("rrm.seed", v); },
       [](const RunConfig& c) { return u2s(c.pipeline.rrm.seed); }},
      {"rrm.protect_first",
       [](RunConfig& c, const std::string& v) { c.pipeline.rrm.protect_first = parse_bool("rrm.protect_first", v); },
       [](const RunConfig& c) { return b2s(c.pipeline.rrm.protect_first); }},
      {"scenario.name", [](RunConfig& c, const std::string& v) { c.scenario.kind = synth::parse_scenario(v); },
       [](const RunConfig& c) { return synth::scenario_name(c.scenario.kind); }},
      {"scenario.frames",
       [](RunConfig& c, const std::string& v) { c.scenario.frames = parse_int("scenario.frames", v); },
       [](const RunConfig& c) { return i2s(c.scenario.frames); }},
      {"scenario.size",
       [](RunConfig& c, const std::string& v) {
         std::tie(c.scenario.height, c.scenario.width) = parse_extent_pair("scenario.size", v);
       },
       [](const RunConfig& c) { return i2s(c.scenario.height) + "x" + i2s(c.scenario.width); }},
      {"scenario.replay",
       [](RunConfig& c, const std::string& v) { c.scenario.replay_factor = parse_int("scenario.replay", v); },
       [](const RunConfig& c) { return i2s(c.scenario.replay_factor); }},
      {"scenario.seed", [](RunConfig& c, const std::string& v) { c.scenario.seed = parse_seed("scenario.seed", v); },
       [](const RunConfig& c) { return u2s(c.scenario.seed); }},
  };
  return table;
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(value);
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
    if (it == table.end()) throw ArgumentError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->set(cfg, value);
  }
  cfg.pipeline.validate();
  cfg.scenario.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(cfg));
  return out;
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + "=" + v + "\n";
  return out;
}

}  // namespace remn::config
