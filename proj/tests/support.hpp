#pragma once

// Shared helpers for the unit suites: seeded random arrays and masks.

#include <cstdint>

#include "remn/masks.hpp"
#include "remn/random.hpp"
#include "remn/tensor.hpp"

namespace remn::test {

inline DenseArray<double> random_array(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  DenseArray<double> a(std::move(shape));
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(lo, hi);
  return a;
}

inline LabelMask random_labels(Index height, Index width, int max_label, Rng& rng) {
  LabelMask m(height, width);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<std::uint8_t>(rng.integer(0, max_label));
  return m;
}

inline LabelMask box_mask(Index height, Index width, Index y0, Index x0, Index y1, Index x1,
                          std::uint8_t label = 1) {
  LabelMask m = LabelMask::Zero(height, width);
  m.block(y0, x0, y1 - y0, x1 - x0).setConstant(label);
  return m;
}

// Probability vector of length n with strictly positive entries.
inline Vector<double> random_distribution(Index n, Rng& rng) {
  Vector<double> p(n);
  for (Index i = 0; i < n; ++i) p[i] = rng.uniform(0.01, 1.0);
  return p / p.sum();
}

}  // namespace remn::test
