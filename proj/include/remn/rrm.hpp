#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "remn/memory.hpp"
#include "remn/random.hpp"
#include "remn/tensor.hpp"

// Redundancy reduction for a full memory bank. A small gate maps pooled
// memory keys to a probability per temporal policy; the argmax policy s picks
// a temporal stride 2^(s+1) by which keys and values are compressed.

namespace remn::rrm {

inline Index policy_stride(Index policy) { return Index{2} << policy; }

/// Capacity N must be divisible by the largest stride 2^S so every policy
/// maps a full bank onto a whole number of entries.
inline void validate_capacity(Index capacity, Index policies) {
  if (policies < 1) throw ArgumentError("rrm.policies must be >= 1");
  if (policies > 30) throw ArgumentError("rrm.policies is too large");
  if (capacity < 1) throw ArgumentError("rrm.capacity must be >= 1");
  const Index largest = Index{1} << policies;
  if (capacity % largest != 0) {
    throw ArgumentError("rrm.capacity " + std::to_string(capacity) + " must be divisible by 2^policies = " +
                        std::to_string(largest));
  }
}

/// Soft modulation gate: Prob = omega(beta(relu(bn(lambda(pool(k))))) + gamma),
/// omega(x) = max(0, tanh(x)).
template <typename Scalar>
struct GateParams {
  RowMatrix<Scalar> lambda_weight;  // Cm x Ck
  Vector<Scalar> lambda_bias;       // Cm
  Vector<Scalar> bn_scale;          // Cm
  Vector<Scalar> bn_shift;          // Cm
  Vector<Scalar> bn_mean;           // Cm, fixed at inference
  Vector<Scalar> bn_var;            // Cm, fixed at inference
  Scalar bn_eps = Scalar(1e-5);
  RowMatrix<Scalar> beta_weight;  // S x Cm
  Vector<Scalar> beta_bias;       // S
  Scalar gamma = 0;

  Index key_channels() const { return lambda_weight.cols(); }
  Index hidden_channels() const { return lambda_weight.rows(); }
  Index policies() const { return beta_weight.rows(); }

  static GateParams zeros(Index key_channels, Index hidden_channels, Index policies) {
    if (key_channels < 1 || hidden_channels < 1 || policies < 1) {
      throw ArgumentError("GateParams: channel counts and policies must be >= 1");
    }
    GateParams p;
    p.lambda_weight = RowMatrix<Scalar>::Zero(hidden_channels, key_channels);
    p.lambda_bias = Vector<Scalar>::Zero(hidden_channels);
    p.bn_scale = Vector<Scalar>::Ones(hidden_channels);
    p.bn_shift = Vector<Scalar>::Zero(hidden_channels);
    p.bn_mean = Vector<Scalar>::Zero(hidden_channels);
    p.bn_var = Vector<Scalar>::Ones(hidden_channels);
    p.beta_weight = RowMatrix<Scalar>::Zero(policies, hidden_channels);
    p.beta_bias = Vector<Scalar>::Zero(policies);
    return p;
  }

  static GateParams random(Index key_channels, Index hidden_channels, Index policies, std::uint64_t seed) {
    GateParams p = zeros(key_channels, hidden_channels, policies);
    Rng rng(seed);
    auto fill = [&](auto& m, double bound) {
      for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    };
    fill(p.lambda_weight, 1.0 / std::sqrt(static_cast<double>(key_channels)));
    fill(p.lambda_bias, 0.5);
    for (Index i = 0; i < hidden_channels; ++i) {
      p.bn_scale[i] = static_cast<Scalar>(rng.uniform(0.5, 1.5));
    }
    fill(p.bn_shift, 0.5);
    fill(p.beta_weight, 1.0 / std::sqrt(static_cast<double>(hidden_channels)));
    fill(p.beta_bias, 0.5);
    p.gamma = static_cast<Scalar>(rng.uniform(0.0, 0.5));
    return p;
  }
};

/// Every intermediate of one gate evaluation.
template <typename Scalar>
struct GateTrace {
  Vector<Scalar> pooled;      // Ck, mean over T of the per-frame GAP
  Vector<Scalar> projected;   // Cm, lambda * pooled + bias
  Vector<Scalar> normalized;  // Cm, after batch norm
  Vector<Scalar> hidden;      // Cm, after ReLU
  Vector<Scalar> logits;      // S, beta * hidden + bias + gamma
  Vector<Scalar> prob;        // S, omega(logits)
};

/// Mean over T of the spatial GAP of a T x H x W x Ck array.
template <typename Scalar>
Vector<Scalar> pooled_keys(const DenseArray<Scalar>& keys) {
  return global_average_pool(keys).matrix().colwise().mean().transpose();
}

template <typename Scalar>
GateTrace<Scalar> gate_forward(const DenseArray<Scalar>& keys, const GateParams<Scalar>& params) {
  require_rank(keys, 4, "gate_probabilities");
  if (keys.extent(3) != params.key_channels()) {
    throw ArgumentError("gate_probabilities: key channels " + std::to_string(keys.extent(3)) +
                        " do not match gate input " + std::to_string(params.key_channels()));
  }
  GateTrace<Scalar> tr;
  tr.pooled = pooled_keys(keys);
  tr.projected = params.lambda_weight * tr.pooled + params.lambda_bias;
  const Vector<Scalar> inv_sd = (params.bn_var.array() + params.bn_eps).rsqrt();
  tr.normalized =
      ((tr.projected - params.bn_mean).array() * inv_sd.array() * params.bn_scale.array() + params.bn_shift.array())
          .matrix();
  tr.hidden = tr.normalized.cwiseMax(Scalar(0));
  tr.logits = (params.beta_weight * tr.hidden + params.beta_bias).array() + params.gamma;
  tr.prob = tr.logits.array().tanh().max(Scalar(0)).matrix();
  return tr;
}

template <typename Scalar>
Vector<Scalar> gate_probabilities(const DenseArray<Scalar>& keys, const GateParams<Scalar>& params) {
  return gate_forward(keys, params).prob;
}

/// Bank keys as a T x H x W x Ck array.
template <typename Scalar>
DenseArray<Scalar> bank_keys(const memory::MemoryBank<Scalar>& bank) {
  const RowMatrix<Scalar> stacked = bank.stacked_keys();
  return DenseArray<Scalar>({bank.size(), bank.height(), bank.width(), bank.key_channels()},
                            Eigen::Map<const Vector<Scalar>>(stacked.data(), stacked.size()));
}

struct TemporalPolicy {
  Index s = 0;
  Index stride() const { return policy_stride(s); }
};

/// Argmax with ties resolved to the smallest index.
template <typename Derived>
TemporalPolicy select_policy(const Eigen::MatrixBase<Derived>& prob) {
  if (prob.size() < 1) throw ArgumentError("select_policy: empty probability vector");
  Index best = 0;
  for (Index i = 1; i < prob.size(); ++i) {
    if (prob(i) > prob(best)) best = i;
  }
  return {best};
}

/// One temporal kernel per policy; kernel s has length 2^(s+1) and is shared
/// by every channel of keys and values.
template <typename Scalar>
struct CompressorParams {
  std::vector<Vector<Scalar>> kernels;

  static CompressorParams averaging(Index policies) {
    CompressorParams p;
    for (Index s = 0; s < policies; ++s) {
      const Index len = policy_stride(s);
      p.kernels.push_back(Vector<Scalar>::Constant(len, Scalar(1) / static_cast<Scalar>(len)));
    }
    return p;
  }
};

namespace detail {

template <typename Scalar>
std::vector<memory::BankEntry<Scalar>> compress_run(const std::vector<memory::BankEntry<Scalar>>& run,
                                                    const Vector<Scalar>& kernel) {
  const auto stride = static_cast<std::size_t>(kernel.size());
  std::vector<memory::BankEntry<Scalar>> out;
  out.reserve(run.size() / stride);
  for (std::size_t start = 0; start + stride <= run.size(); start += stride) {
    memory::BankEntry<Scalar> merged;
    merged.key = DenseArray<Scalar>(run[start].key.shape());
    merged.values.reserve(run[start].values.size());
    for (const auto& v : run[start].values) merged.values.emplace_back(v.shape());
    for (std::size_t w = 0; w < stride; ++w) {
      const auto& src = run[start + w];
      const Scalar weight = kernel[static_cast<Index>(w)];
      merged.key.data() += weight * src.key.data();
      for (std::size_t k = 0; k < src.values.size(); ++k) merged.values[k].data() += weight * src.values[k].data();
    }
    merged.frame_index = run[start + stride - 1].frame_index;
    out.push_back(std::move(merged));
  }
  return out;
}

template <typename Scalar>
const Vector<Scalar>& kernel_for(const TemporalPolicy& policy, const CompressorParams<Scalar>& comp) {
  if (policy.s < 0 || policy.s >= static_cast<Index>(comp.kernels.size())) {
    throw ArgumentError("compress: policy " + std::to_string(policy.s) + " has no kernel");
  }
  const auto& kernel = comp.kernels[static_cast<std::size_t>(policy.s)];
  if (kernel.size() != policy.stride()) throw ArgumentError("compress: kernel length must equal the stride");
  return kernel;
}

}  // namespace detail

/// Non-overlapping windows of 2^(s+1) consecutive entries, each reduced to one
/// entry by the policy's temporal kernel. T' = T / 2^(s+1).
template <typename Scalar>
memory::MemoryBank<Scalar> compress(const memory::MemoryBank<Scalar>& bank, const TemporalPolicy& policy,
                                    const CompressorParams<Scalar>& comp) {
  const auto& kernel = detail::kernel_for(policy, comp);
  if (bank.empty() || bank.size() % policy.stride() != 0) {
    throw StateError("compress: bank length " + std::to_string(bank.size()) + " is not divisible by stride " +
                     std::to_string(policy.stride()));
  }
  memory::MemoryBank<Scalar> out = bank;
  out.replace_entries(detail::compress_run(bank.entries(), kernel));
  return out;
}

/// Variant that leaves the first (annotated) entry untouched. Entries after it
/// are windowed as in compress; a trailing remainder shorter than the stride
/// is kept as is.
template <typename Scalar>
memory::MemoryBank<Scalar> compress_protect_first(const memory::MemoryBank<Scalar>& bank,
                                                  const TemporalPolicy& policy,
                                                  const CompressorParams<Scalar>& comp) {
  const auto& kernel = detail::kernel_for(policy, comp);
  if (bank.size() < 1 + policy.stride()) {
    throw StateError("compress: bank too short to compress behind a protected first entry");
  }
  const auto& entries = bank.entries();
  const auto stride = static_cast<std::size_t>(policy.stride());
  const std::size_t whole = (entries.size() - 1) / stride * stride;
  std::vector<memory::BankEntry<Scalar>> run(entries.begin() + 1, entries.begin() + 1 + static_cast<long>(whole));
  std::vector<memory::BankEntry<Scalar>> next{entries.front()};
  for (auto& e : detail::compress_run(run, kernel)) next.push_back(std::move(e));
  next.insert(next.end(), entries.begin() + 1 + static_cast<long>(whole), entries.end());
  memory::MemoryBank<Scalar> out = bank;
  out.replace_entries(std::move(next));
  return out;
}

/// Softmax over channels of the (T, H, W) mean of a stacked feature matrix.
template <typename Scalar>
Vector<Scalar> channel_distribution(const RowMatrix<Scalar>& stacked) {
  const Vector<Scalar> pooled = stacked.colwise().mean().transpose();
  const DenseArray<Scalar> logits({pooled.size()}, pooled);
  return softmax_axis(logits, 0).data();
}

/// KL(keys before || keys after) + mean over objects of KL(values before || values after),
/// each on pooled channel distributions.
template <typename Scalar>
Scalar rrm_loss(const memory::MemoryBank<Scalar>& before, const memory::MemoryBank<Scalar>& after) {
  if (before.empty() || after.empty()) throw StateError("rrm_loss: empty bank");
  if (before.key_channels() != after.key_channels() || before.value_channels() != after.value_channels() ||
      before.objects() != after.objects()) {
    throw ArgumentError("rrm_loss: channel mismatch between banks");
  }
  Scalar loss = kl_divergence(channel_distribution(before.stacked_keys()), channel_distribution(after.stacked_keys()));
  Scalar values = 0;
  for (Index k = 0; k < before.objects(); ++k) {
    values += kl_divergence(channel_distribution(before.stacked_values(k)),
                            channel_distribution(after.stacked_values(k)));
  }
  return loss + values / static_cast<Scalar>(before.objects());
}

/// d(sum of Prob) / d(parameter) for every learnable gate parameter.
/// Batch-norm running statistics are fixed and carry no gradient.
template <typename Scalar>
struct GateGradient {
  RowMatrix<Scalar> lambda_weight;
  Vector<Scalar> lambda_bias;
  Vector<Scalar> bn_scale;
  Vector<Scalar> bn_shift;
  RowMatrix<Scalar> beta_weight;
  Vector<Scalar> beta_bias;
  Scalar gamma = 0;
};

/// Smallest distance of any ReLU or omega input from its kink at 0.
template <typename Scalar>
Scalar kink_distance(const GateTrace<Scalar>& tr) {
  return std::min(tr.normalized.cwiseAbs().minCoeff(), tr.logits.cwiseAbs().minCoeff());
}

/// Analytic gradient of sum(Prob) by the chain rule. Throws ArgumentError when
/// an activation input lies within `kink_margin` of a kink, where the
/// derivative is not defined.
template <typename Scalar>
GateGradient<Scalar> gate_gradient(const DenseArray<Scalar>& keys, const GateParams<Scalar>& params,
                                   Scalar kink_margin = 0) {
  const auto tr = gate_forward(keys, params);
  if (kink_margin > 0 && kink_distance(tr) <= kink_margin) {
    throw ArgumentError("gate_gradient: an activation input is within the kink margin");
  }
  const Vector<Scalar> d_logits =
      (tr.logits.array() > Scalar(0)).select(Scalar(1) - tr.logits.array().tanh().square(), Scalar(0)).matrix();
  const Vector<Scalar> d_hidden = params.beta_weight.transpose() * d_logits;
  const Vector<Scalar> d_normalized = (tr.normalized.array() > Scalar(0)).select(d_hidden.array(), Scalar(0));
  const Vector<Scalar> inv_sd = (params.bn_var.array() + params.bn_eps).rsqrt();
  const Vector<Scalar> d_projected = (d_normalized.array() * params.bn_scale.array() * inv_sd.array()).matrix();

  GateGradient<Scalar> g;
  g.gamma = d_logits.sum();
  g.beta_bias = d_logits;
  g.beta_weight = d_logits * tr.hidden.transpose();
  g.bn_shift = d_normalized;
  g.bn_scale = (d_normalized.array() * (tr.projected - params.bn_mean).array() * inv_sd.array()).matrix();
  g.lambda_bias = d_projected;
  g.lambda_weight = d_projected * tr.pooled.transpose();
  return g;
}

}  // namespace remn::rrm
