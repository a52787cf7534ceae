#pragma once

#include <algorithm>

#include "remn/masks.hpp"

// Adaptive sampling: a query frame enters memory once any object's mask has
// drifted far enough from the latest stored mask.

namespace remn::sampling {

struct SamplingConfig {
  double sigma = 0.1;

  void validate() const {
    if (!(sigma > 0.0 && sigma < 1.0)) throw ArgumentError("asm.sigma must lie in (0, 1)");
  }
};

enum class Decision { skip, store };

/// D = 1 - |a & b| / |a | b|. Both empty gives 0, exactly one empty gives 1.
inline double variation_rate(const BinaryMask& current, const BinaryMask& latest) {
  if (current.rows() != latest.rows() || current.cols() != latest.cols()) {
    throw ArgumentError("variation_rate: mask shapes differ");
  }
  const auto intersection = (current && latest).count();
  const auto uni = (current || latest).count();
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(intersection) / static_cast<double>(uni);
}

/// Largest per-object variation over every label present in either mask.
inline double max_variation(const LabelMask& current, const LabelMask& latest) {
  require_same_shape(current, latest, "should_store");
  const int objects = std::max(max_label(current), max_label(latest));
  double worst = 0.0;
  for (int id = 1; id <= objects; ++id) {
    worst = std::max(worst, variation_rate(object_slice(current, id), object_slice(latest, id)));
  }
  return worst;
}

inline Decision should_store(const LabelMask& current, const LabelMask& latest, const SamplingConfig& cfg) {
  return max_variation(current, latest) > cfg.sigma ? Decision::store : Decision::skip;
}

}  // namespace remn::sampling
