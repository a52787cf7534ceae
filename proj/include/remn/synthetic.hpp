#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "remn/masks.hpp"
#include "remn/pipeline.hpp"

namespace remn::synth {

enum class ScenarioKind { plain, distractor, deform, long_video };

ScenarioKind parse_scenario(const std::string& name);
std::string scenario_name(ScenarioKind kind);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::plain;
  Index frames = 60;  // per replay for the long scenario
  Index height = 384;
  Index width = 384;
  Index replay_factor = 1;
  std::uint64_t seed = 0;

  void validate() const;
  Index total_frames() const { return kind == ScenarioKind::long_video ? frames * replay_factor : frames; }
};

struct SyntheticVideo {
  std::vector<Frame> frames;
  std::vector<LabelMask> masks;  // ground truth, one per frame
};

/// plain: one coloured square moving over a static textured background along
/// a seeded waypoint path with pauses.
/// distractor: two squares of identical colour, the target confined to the
/// left half and the distractor to the right half; only the target is
/// labelled.
/// deform: a square whose side oscillates around a slowly drifting centre.
/// long: the plain sequence replayed `replay_factor` times.
SyntheticVideo generate_synthetic_video(const ScenarioSpec& spec);

}  // namespace remn::synth
