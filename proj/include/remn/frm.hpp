#pragma once

#include <cmath>
#include <cstdint>

#include "remn/random.hpp"
#include "remn/tensor.hpp"

// Foreground reinforcement: a mask-gated local attention that rebuilds every
// query-key pixel as a weighted sum over its kh x kw neighbourhood.

namespace remn::frm {

/// Convolution parameters of the attention branch.
///
/// local: kh x kw x (Ck + 1) x Ck over the key concatenated with the mask
/// channel; logits: 1 x 1 x Ck x Z with Z = kh * kw, one logit per
/// neighbourhood tap.
template <typename Scalar>
struct FrmParams {
  Index kernel_height = 3;
  Index kernel_width = 3;
  DenseArray<Scalar> local_kernel;
  DenseArray<Scalar> local_bias;
  DenseArray<Scalar> logits_kernel;
  DenseArray<Scalar> logits_bias;

  Index taps() const { return kernel_height * kernel_width; }
  Index key_channels() const { return local_bias.size(); }

  static FrmParams zeros(Index key_channels, Index kernel_height, Index kernel_width) {
    if (key_channels < 1) throw ArgumentError("FrmParams: key channels must be >= 1");
    if (kernel_height < 1 || kernel_width < 1 || kernel_height % 2 == 0 || kernel_width % 2 == 0) {
      throw ArgumentError("FrmParams: kernel extents must be odd and >= 1");
    }
    FrmParams p;
    p.kernel_height = kernel_height;
    p.kernel_width = kernel_width;
    const Index z = kernel_height * kernel_width;
    p.local_kernel = DenseArray<Scalar>({kernel_height, kernel_width, key_channels + 1, key_channels});
    p.local_bias = DenseArray<Scalar>({key_channels});
    p.logits_kernel = DenseArray<Scalar>({1, 1, key_channels, z});
    p.logits_bias = DenseArray<Scalar>({z});
    return p;
  }

  // Weights uniform in +-scale / sqrt(fan_in); the logit bias of the centre
  // tap is raised by `center_bias` so untrained attention leans toward the
  // pixel itself instead of a box blur.
  static FrmParams random(Index key_channels, Index kernel_height, Index kernel_width,
                          std::uint64_t seed, Scalar scale = 1, Scalar center_bias = 0) {
    FrmParams p = zeros(key_channels, kernel_height, kernel_width);
    Rng rng(seed);
    auto fill = [&](DenseArray<Scalar>& a, Index fan_in) {
      const double bound = static_cast<double>(scale) / std::sqrt(static_cast<double>(fan_in));
      for (Index i = 0; i < a.size(); ++i) a.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    };
    fill(p.local_kernel, kernel_height * kernel_width * (key_channels + 1));
    fill(p.local_bias, kernel_height * kernel_width * (key_channels + 1));
    fill(p.logits_kernel, key_channels);
    fill(p.logits_bias, key_channels);
    p.logits_bias.data()[p.taps() / 2] += center_bias;
    return p;
  }
};

/// Per-pixel weights over the Z neighbourhood taps, already scaled by the
/// mask gate. Tap p sits at offset (p / kw - kh / 2, p % kw - kw / 2).
template <typename Scalar>
struct AttentionField {
  Index kernel_height = 1;
  Index kernel_width = 1;
  DenseArray<Scalar> alpha;  // H x W x Z
};

/// G(m) = exp(m) / e: 1 on foreground, 1/e on background.
template <typename Scalar>
Scalar mask_gate(Scalar m) {
  return std::exp(m - Scalar(1));
}

/// Concatenates a mask channel onto the key: H x W x (C + 1).
template <typename Scalar>
DenseArray<Scalar> concat_mask(const DenseArray<Scalar>& key, const DenseArray<Scalar>& mask) {
  const Index height = key.extent(0), width = key.extent(1), channels = key.extent(2);
  DenseArray<Scalar> out({height, width, channels + 1});
  out.matrix().leftCols(channels) = key.matrix();
  out.matrix().col(channels) = mask.matrix().col(0);
  return out;
}

/// Pre-gate logits H x W x Z.
template <typename Scalar>
DenseArray<Scalar> attention_logits(const DenseArray<Scalar>& key, const DenseArray<Scalar>& mask,
                                    const FrmParams<Scalar>& params) {
  require_rank(key, 3, "frm key");
  require_rank(mask, 3, "frm mask");
  if (mask.extent(0) != key.extent(0) || mask.extent(1) != key.extent(1) || mask.extent(2) != 1) {
    throw ArgumentError("frm: mask must be H x W x 1 matching the key, got " + shape_string(mask.shape()) +
                        " for key " + shape_string(key.shape()));
  }
  if (key.extent(2) != params.key_channels()) {
    throw ArgumentError("frm: key has " + std::to_string(key.extent(2)) + " channels, params expect " +
                        std::to_string(params.key_channels()));
  }
  const auto features = conv2d(concat_mask(key, mask), params.local_kernel, params.local_bias);
  return conv2d(features, params.logits_kernel, params.logits_bias);
}

template <typename Scalar>
AttentionField<Scalar> attention_weights(const DenseArray<Scalar>& key, const DenseArray<Scalar>& mask,
                                         const FrmParams<Scalar>& params) {
  AttentionField<Scalar> field{params.kernel_height, params.kernel_width,
                               softmax_axis(attention_logits(key, mask, params), 2)};
  auto alpha = field.alpha.matrix();
  const auto m = mask.matrix().col(0);
  for (Index px = 0; px < alpha.rows(); ++px) alpha.row(px) *= mask_gate(m(px));
  return field;
}

/// out(i, j) = sum_p alpha(i, j, p) * key(neighbour p of (i, j)), zero outside the map.
template <typename Scalar>
DenseArray<Scalar> enhance(const DenseArray<Scalar>& key, const AttentionField<Scalar>& field) {
  require_rank(key, 3, "enhance key");
  const Index height = key.extent(0), width = key.extent(1);
  const Index kh = field.kernel_height, kw = field.kernel_width;
  if (field.alpha.shape() != Shape{height, width, kh * kw}) {
    throw ArgumentError("enhance: attention field " + shape_string(field.alpha.shape()) +
                        " does not match key " + shape_string(key.shape()));
  }
  DenseArray<Scalar> out(key.shape());
  auto out_m = out.matrix();
  const auto in_m = key.matrix();
  const auto alpha = field.alpha.matrix();
  for (Index p = 0; p < kh * kw; ++p) {
    const Index dy = p / kw - kh / 2, dx = p % kw - kw / 2;
    const Index j0 = std::max<Index>(0, -dx), j1 = std::min<Index>(width, width - dx);
    if (j1 <= j0) continue;
    for (Index i = 0; i < height; ++i) {
      const Index src = i + dy;
      if (src < 0 || src >= height) continue;
      const Index n = j1 - j0;
      out_m.middleRows(i * width + j0, n).array() +=
          in_m.middleRows(src * width + j0 + dx, n).array().colwise() *
          alpha.col(p).segment(i * width + j0, n).array();
    }
  }
  return out;
}

/// attention_weights followed by enhance.
template <typename Scalar>
DenseArray<Scalar> reinforce(const DenseArray<Scalar>& key, const DenseArray<Scalar>& mask,
                             const FrmParams<Scalar>& params) {
  return enhance(key, attention_weights(key, mask, params));
}

}  // namespace remn::frm
