#include <doctest.h>

#include <cmath>

#include "remn/frm.hpp"
#include "support.hpp"

using namespace remn;
using remn::test::random_array;

namespace {

DenseArray<double> random_mask(Index h, Index w, Rng& rng) {
  DenseArray<double> m({h, w, 1});
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(rng.integer(0, 1));
  return m;
}

// Per-pixel reimplementation of the attention weights with explicit loops.
DenseArray<double> alpha_oracle(const DenseArray<double>& key, const DenseArray<double>& mask,
                                const frm::FrmParams<double>& p) {
  const Index h = key.extent(0), w = key.extent(1), c = key.extent(2);
  const Index kh = p.kernel_height, kw = p.kernel_width, z = kh * kw;
  auto feature = [&](Index y, Index x, Index ch) -> double {
    if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
    return ch < c ? key(y, x, ch) : mask(y, x, 0);
  };
  DenseArray<double> alpha({h, w, z});
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      std::vector<double> hidden(static_cast<std::size_t>(c));
      for (Index o = 0; o < c; ++o) {
        double acc = p.local_bias(o);
        for (Index u = 0; u < kh; ++u)
          for (Index v = 0; v < kw; ++v)
            for (Index ch = 0; ch <= c; ++ch) acc += feature(i + u - kh / 2, j + v - kw / 2, ch) * p.local_kernel(u, v, ch, o);
        hidden[static_cast<std::size_t>(o)] = acc;
      }
      std::vector<double> logits(static_cast<std::size_t>(z));
      double peak = -1e300;
      for (Index q = 0; q < z; ++q) {
        double acc = p.logits_bias(q);
        for (Index o = 0; o < c; ++o) acc += hidden[static_cast<std::size_t>(o)] * p.logits_kernel(0, 0, o, q);
        logits[static_cast<std::size_t>(q)] = acc;
        peak = std::max(peak, acc);
      }
      double total = 0;
      for (auto& l : logits) total += (l = std::exp(l - peak));
      const double gate = std::exp(mask(i, j, 0)) / std::exp(1.0);
      for (Index q = 0; q < z; ++q) alpha(i, j, q) = gate * logits[static_cast<std::size_t>(q)] / total;
    }
  return alpha;
}

}  // namespace

TEST_CASE("mask_gate examples") {
  CHECK(std::abs(frm::mask_gate(1.0) - 1.0) < 1e-12);
  CHECK(std::abs(frm::mask_gate(0.0) - 1.0 / std::exp(1.0)) < 1e-12);
  CHECK(frm::mask_gate(0.0) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(frm::mask_gate(0.5) == doctest::Approx(0.606531).epsilon(1e-6));
  double prev = frm::mask_gate(0.0);
  for (int i = 1; i <= 100; ++i) {
    const double g = frm::mask_gate(i / 100.0);
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("attention weights with a single tap equal the gate") {
  Rng rng(21);
  const auto p = frm::FrmParams<double>::random(3, 1, 1, 5, 1.0);
  const auto key = random_array({4, 5, 3}, rng);
  const auto mask = random_mask(4, 5, rng);
  const auto field = frm::attention_weights(key, mask, p);
  for (Index px = 0; px < 20; ++px) {
    CHECK(std::abs(field.alpha.data()[px] - frm::mask_gate(mask.data()[px])) < 1e-12);
  }
  // Enhanced key is the gated key exactly.
  const auto out = frm::enhance(key, field);
  for (Index px = 0; px < 20; ++px)
    for (Index c = 0; c < 3; ++c) {
      CHECK(std::abs(out.matrix()(px, c) - frm::mask_gate(mask.data()[px]) * key.matrix()(px, c)) < 1e-12);
    }
}

TEST_CASE("zero logits give uniform pre-gate weights") {
  Rng rng(22);
  auto p = frm::FrmParams<double>::random(4, 3, 3, 6, 1.0);
  p.logits_kernel.data().setZero();
  p.logits_bias.data().setZero();
  const auto key = random_array({5, 5, 4}, rng);
  const auto ones = DenseArray<double>::constant({5, 5, 1}, 1.0);
  const auto field = frm::attention_weights(key, ones, p);
  for (Index i = 0; i < field.alpha.size(); ++i) CHECK(field.alpha.data()[i] == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("attention weights match a per-pixel oracle") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = frm::FrmParams<double>::random(3, 3, 3, 100 + trial, 1.0, 0.5);
    const auto key = random_array({4, 4, 3}, rng);
    const auto mask = random_mask(4, 4, rng);
    const auto field = frm::attention_weights(key, mask, p);
    const auto want = alpha_oracle(key, mask, p);
    CHECK((field.alpha.data() - want.data()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("gated weights sum to the gate value") {
  Rng rng(24);
  const auto p = frm::FrmParams<double>::random(4, 3, 5, 9, 1.0);
  const auto key = random_array({6, 7, 4}, rng);
  DenseArray<double> mask({6, 7, 1});
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform();
  const auto field = frm::attention_weights(key, mask, p);
  const Vector<double> sums = field.alpha.matrix().rowwise().sum();
  for (Index px = 0; px < sums.size(); ++px) CHECK(std::abs(sums[px] - frm::mask_gate(mask.data()[px])) < 1e-6);
  CHECK((field.alpha.data().array() >= 0.0).all());
}

TEST_CASE("enhance examples") {
  Rng rng(25);
  const auto key = random_array({4, 4, 2}, rng);
  const auto p1 = frm::FrmParams<double>::zeros(2, 1, 1);
  const auto full = frm::reinforce(key, DenseArray<double>::constant({4, 4, 1}, 1.0), p1);
  CHECK((full.data() - key.data()).cwiseAbs().maxCoeff() == 0.0);
  const auto empty = frm::reinforce(key, DenseArray<double>({4, 4, 1}), p1);
  CHECK((empty.data() - key.data() / std::exp(1.0)).cwiseAbs().maxCoeff() < 1e-15);

  const auto p3 = frm::FrmParams<double>::random(2, 3, 3, 4, 1.0);
  const auto constant = DenseArray<double>::constant({5, 5, 2}, 1.7);
  const auto out = frm::reinforce(constant, DenseArray<double>::constant({5, 5, 1}, 1.0), p3);
  CHECK(out(2, 2, 0) == doctest::Approx(1.7));
  CHECK(out(2, 2, 1) == doctest::Approx(1.7));
}

TEST_CASE("foreground pixels are convex combinations of their neighbourhood") {
  Rng rng(26);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = frm::FrmParams<double>::random(3, 3, 3, 1000 + trial, 1.0);
    const auto key = random_array({5, 6, 3}, rng);
    const auto mask = random_mask(5, 6, rng);
    const auto out = frm::reinforce(key, mask, p);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 6; ++j) {
        if (mask(i, j, 0) != 1.0) continue;
        for (Index c = 0; c < 3; ++c) {
          double lo = 1e300, hi = -1e300;
          for (Index u = -1; u <= 1; ++u)
            for (Index v = -1; v <= 1; ++v) {
              const Index y = i + u, x = j + v;
              const double val = (y < 0 || y >= 5 || x < 0 || x >= 6) ? 0.0 : key(y, x, c);
              lo = std::min(lo, val);
              hi = std::max(hi, val);
            }
          CHECK(out(i, j, c) >= lo - 1e-12);
          CHECK(out(i, j, c) <= hi + 1e-12);
        }
      }
  }
}

TEST_CASE("enhance is linear in the key for fixed weights") {
  Rng rng(27);
  const auto p = frm::FrmParams<double>::random(3, 3, 3, 77, 1.0);
  const auto a = random_array({4, 5, 3}, rng), b = random_array({4, 5, 3}, rng);
  const auto field = frm::attention_weights(a, random_mask(4, 5, rng), p);
  const DenseArray<double> mix(a.shape(), 2.0 * a.data() - 0.5 * b.data());
  const Vector<double> rhs = 2.0 * frm::enhance(a, field).data() - 0.5 * frm::enhance(b, field).data();
  CHECK((frm::enhance(mix, field).data() - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("argmax of a slice is invariant to shifting its logits") {
  Rng rng(28);
  const auto logits = random_array({1, 1, 9}, rng, -3, 3);
  DenseArray<double> shifted = logits;
  shifted.data().array() += 4.2;
  Index a = 0, b = 0;
  softmax_axis(logits, 2).data().maxCoeff(&a);
  softmax_axis(shifted, 2).data().maxCoeff(&b);
  CHECK(a == b);
}

TEST_CASE("background pixels are suppressed by exactly 1/e") {
  Rng rng(29);
  const auto p = frm::FrmParams<double>::random(3, 3, 3, 31, 1.0);
  const auto key = random_array({4, 4, 3}, rng);
  // Same logits for both cases: take the pre-gate weights once and apply each gate.
  const auto logits = frm::attention_logits(key, DenseArray<double>({4, 4, 1}), p);
  frm::AttentionField<double> fg{3, 3, softmax_axis(logits, 2)};
  frm::AttentionField<double> bg = fg;
  bg.alpha.data() *= frm::mask_gate(0.0);
  const auto kf = frm::enhance(key, fg), kb = frm::enhance(key, bg);
  for (Index px = 0; px < 16; ++px) {
    CHECK(kb.matrix().row(px).norm() == doctest::Approx(kf.matrix().row(px).norm() / std::exp(1.0)).epsilon(1e-12));
  }
}

TEST_CASE("frm shape errors") {
  Rng rng(30);
  const auto p = frm::FrmParams<double>::random(3, 3, 3, 1, 1.0);
  CHECK_THROWS_AS(frm::attention_weights(random_array({4, 4, 2}, rng), DenseArray<double>({4, 4, 1}), p), ArgumentError);
  CHECK_THROWS_AS(frm::attention_weights(random_array({4, 4, 3}, rng), DenseArray<double>({4, 5, 1}), p), ArgumentError);
  CHECK_THROWS_AS(frm::FrmParams<double>::zeros(3, 2, 3), ArgumentError);
}
