#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "remn/errors.hpp"
#include "remn/masks.hpp"

namespace remn {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

/// Dense row-major array of arbitrary rank.
///
/// Feature maps are H x W x C; banks of frames are T x H x W x C. Every array
/// can be viewed as a (size / C) x C row-major matrix with `matrix()`, which is
/// how the heavy kernels hand work to Eigen.
template <typename Scalar>
class DenseArray {
 public:
  using MatrixView = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixView = Eigen::Map<const RowMatrix<Scalar>>;

  DenseArray() = default;

  explicit DenseArray(Shape shape) : shape_(std::move(shape)) {
    check_extents();
    data_ = Vector<Scalar>::Zero(shape_size(shape_));
  }

  DenseArray(Shape shape, Vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents();
    if (data_.size() != shape_size(shape_)) {
      throw ArgumentError("DenseArray: data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_string(shape_));
    }
  }

  static DenseArray constant(Shape shape, Scalar value) {
    DenseArray out(std::move(shape));
    out.data_.setConstant(value);
    return out;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index extent(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return data_.size(); }
  bool empty() const { return shape_.empty(); }

  Vector<Scalar>& data() { return data_; }
  const Vector<Scalar>& data() const { return data_; }

  template <typename... Idx>
  Scalar& operator()(Idx... idx) {
    return data_[offset(idx...)];
  }
  template <typename... Idx>
  const Scalar& operator()(Idx... idx) const {
    return data_[offset(idx...)];
  }

  // Rows = product of leading extents, cols = last extent.
  MatrixView matrix() { return MatrixView(data_.data(), rows(), cols()); }
  ConstMatrixView matrix() const { return ConstMatrixView(data_.data(), rows(), cols()); }

  DenseArray reshaped(Shape shape) const {
    if (shape_size(shape) != size()) {
      throw ArgumentError("reshape " + shape_string(shape_) + " -> " + shape_string(shape));
    }
    return DenseArray(std::move(shape), data_);
  }

  bool all_finite() const { return data_.allFinite(); }

  template <typename Other>
  DenseArray<Other> cast() const {
    return DenseArray<Other>(shape_, data_.template cast<Other>());
  }

 private:
  void check_extents() const {
    for (Index e : shape_) {
      if (e < 1) throw ArgumentError("DenseArray: extents must be positive, got " + shape_string(shape_));
    }
  }

  Index cols() const { return shape_.empty() ? 0 : shape_.back(); }
  Index rows() const { return shape_.empty() ? 0 : size() / shape_.back(); }

  template <typename... Idx>
  Index offset(Idx... idx) const {
    const Index index[] = {static_cast<Index>(idx)...};
    eigen_assert(sizeof...(Idx) == shape_.size());
    Index off = 0;
    for (std::size_t a = 0; a < sizeof...(Idx); ++a) off = off * shape_[a] + index[a];
    return off;
  }

  Shape shape_;
  Vector<Scalar> data_;
};

template <typename Scalar>
void require_rank(const DenseArray<Scalar>& x, Index rank, const char* what) {
  if (x.rank() != rank) {
    throw ArgumentError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                        shape_string(x.shape()));
  }
}

/// Softmax along `axis`, stabilized by subtracting the per-slice maximum.
template <typename Scalar>
DenseArray<Scalar> softmax_axis(const DenseArray<Scalar>& x, Index axis) {
  if (axis < 0 || axis >= x.rank()) {
    throw ArgumentError("softmax_axis: axis " + std::to_string(axis) + " out of range for " +
                        shape_string(x.shape()));
  }
  const auto& shape = x.shape();
  const Index n = shape[static_cast<std::size_t>(axis)];
  Index outer = 1, inner = 1;
  for (Index a = 0; a < axis; ++a) outer *= shape[static_cast<std::size_t>(a)];
  for (Index a = axis + 1; a < x.rank(); ++a) inner *= shape[static_cast<std::size_t>(a)];

  DenseArray<Scalar> out(shape);
  const Scalar* in = x.data().data();
  Scalar* dst = out.data().data();
  for (Index o = 0; o < outer; ++o) {
    for (Index i = 0; i < inner; ++i) {
      const Index base = o * n * inner + i;
      Scalar peak = in[base];
      for (Index k = 1; k < n; ++k) peak = std::max(peak, in[base + k * inner]);
      Scalar total = 0;
      for (Index k = 0; k < n; ++k) {
        const Scalar e = std::exp(in[base + k * inner] - peak);
        dst[base + k * inner] = e;
        total += e;
      }
      for (Index k = 0; k < n; ++k) dst[base + k * inner] /= total;
    }
  }
  return out;
}

inline constexpr double kKlFloor = 1e-12;

/// KL(p || q) = sum p log((p + eps) / (q + eps)), eps = 1e-12.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence(const Eigen::DenseBase<DerivedP>& p,
                                        const Eigen::DenseBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw ArgumentError("kl_divergence: shape mismatch");
  }
  const Scalar eps = static_cast<Scalar>(kKlFloor);
  const auto pa = p.derived().array();
  const auto qa = q.derived().array();
  return (pa * ((pa + eps) / (qa + eps)).log()).sum();
}

template <typename Scalar>
Scalar kl_divergence(const DenseArray<Scalar>& p, const DenseArray<Scalar>& q) {
  if (p.shape() != q.shape()) {
    throw ArgumentError("kl_divergence: shape mismatch " + shape_string(p.shape()) + " vs " +
                        shape_string(q.shape()));
  }
  return kl_divergence(p.data(), q.data());
}

/// "Same" 2-D cross-correlation, stride 1, zero padding.
/// x: H x W x Cin, kernel: kh x kw x Cin x Cout (both odd), bias: Cout.
template <typename Scalar>
DenseArray<Scalar> conv2d(const DenseArray<Scalar>& x, const DenseArray<Scalar>& kernel,
                          const DenseArray<Scalar>& bias) {
  require_rank(x, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  const Index height = x.extent(0), width = x.extent(1), cin = x.extent(2);
  const Index kh = kernel.extent(0), kw = kernel.extent(1), cout = kernel.extent(3);
  if (kernel.extent(2) != cin) {
    throw ArgumentError("conv2d: kernel expects " + std::to_string(kernel.extent(2)) +
                        " input channels, input has " + std::to_string(cin));
  }
  if (kh % 2 == 0 || kw % 2 == 0) throw ArgumentError("conv2d: kernel extents must be odd");
  if (bias.size() != cout) throw ArgumentError("conv2d: bias length must equal output channels");

  DenseArray<Scalar> out({height, width, cout});
  auto out_m = out.matrix();
  out_m.rowwise() = bias.data().transpose();
  const auto in_m = x.matrix();
  const Index rh = kh / 2, rw = kw / 2;
  // Each kernel tap is a (Cin x Cout) matrix applied to a shifted, contiguous
  // run of input pixels.
  const Eigen::Map<const RowMatrix<Scalar>> taps(kernel.data().data(), kh * kw * cin, cout);
  for (Index ky = 0; ky < kh; ++ky) {
    for (Index kx = 0; kx < kw; ++kx) {
      const auto tap = taps.middleRows((ky * kw + kx) * cin, cin);
      const Index dy = ky - rh, dx = kx - rw;
      const Index j0 = std::max<Index>(0, -dx), j1 = std::min<Index>(width, width - dx);
      if (j1 <= j0) continue;
      for (Index i = 0; i < height; ++i) {
        const Index src = i + dy;
        if (src < 0 || src >= height) continue;
        out_m.middleRows(i * width + j0, j1 - j0).noalias() +=
            in_m.middleRows(src * width + j0 + dx, j1 - j0) * tap;
      }
    }
  }
  return out;
}

/// T x H x W x C -> T x 1 x 1 x C spatial means.
template <typename Scalar>
DenseArray<Scalar> global_average_pool(const DenseArray<Scalar>& x) {
  require_rank(x, 4, "global_average_pool");
  const Index frames = x.extent(0), pixels = x.extent(1) * x.extent(2), channels = x.extent(3);
  DenseArray<Scalar> out({frames, 1, 1, channels});
  const auto in_m = x.matrix();
  for (Index t = 0; t < frames; ++t) {
    out.matrix().row(t) = in_m.middleRows(t * pixels, pixels).colwise().mean();
  }
  return out;
}

/// Source index sampled for output cell `i` when resizing `from` cells to `to`:
/// the input cell containing the output cell's center.
inline Index nearest_source(Index i, Index from, Index to) {
  return std::min<Index>(from - 1, ((2 * i + 1) * from) / (2 * to));
}

/// Nearest-neighbour downsampling of a label map to H x W x 1.
template <typename Scalar = double>
DenseArray<Scalar> resize_mask_nearest(const LabelMask& mask, Index height, Index width) {
  if (height < 1 || width < 1) throw ArgumentError("resize_mask_nearest: zero target extent");
  if (mask.rows() < height || mask.cols() < width) {
    throw ArgumentError("resize_mask_nearest: target larger than source");
  }
  DenseArray<Scalar> out({height, width, 1});
  for (Index i = 0; i < height; ++i) {
    const Index si = nearest_source(i, mask.rows(), height);
    for (Index j = 0; j < width; ++j) {
      out(i, j, 0) = static_cast<Scalar>(mask(si, nearest_source(j, mask.cols(), width)));
    }
  }
  return out;
}

/// Bilinear upsampling by an integer factor, align_corners = false
/// (source coordinate (d + 0.5) / factor - 0.5, clamped to the grid).
template <typename Scalar>
DenseArray<Scalar> bilinear_upsample(const DenseArray<Scalar>& x, Index factor) {
  require_rank(x, 3, "bilinear_upsample");
  if (factor < 1) throw ArgumentError("bilinear_upsample: factor must be >= 1");
  const Index height = x.extent(0), width = x.extent(1), channels = x.extent(2);
  const Index out_h = height * factor, out_w = width * factor;

  struct Tap {
    Index lo, hi;
    Scalar frac;
  };
  auto taps_for = [factor](Index n, Index extent) {
    std::vector<Tap> taps(static_cast<std::size_t>(n));
    for (Index d = 0; d < n; ++d) {
      Scalar s = (static_cast<Scalar>(d) + Scalar(0.5)) / static_cast<Scalar>(factor) - Scalar(0.5);
      s = std::clamp<Scalar>(s, 0, static_cast<Scalar>(extent - 1));
      const Index lo = static_cast<Index>(std::floor(s));
      taps[static_cast<std::size_t>(d)] = {lo, std::min(lo + 1, extent - 1), s - static_cast<Scalar>(lo)};
    }
    return taps;
  };
  const auto ys = taps_for(out_h, height);
  const auto xs = taps_for(out_w, width);

  DenseArray<Scalar> out({out_h, out_w, channels});
  const auto in_m = x.matrix();
  auto out_m = out.matrix();
  for (Index i = 0; i < out_h; ++i) {
    const Tap& ty = ys[static_cast<std::size_t>(i)];
    for (Index j = 0; j < out_w; ++j) {
      const Tap& tx = xs[static_cast<std::size_t>(j)];
      out_m.row(i * out_w + j) =
          (1 - ty.frac) * ((1 - tx.frac) * in_m.row(ty.lo * width + tx.lo) + tx.frac * in_m.row(ty.lo * width + tx.hi)) +
          ty.frac * ((1 - tx.frac) * in_m.row(ty.hi * width + tx.lo) + tx.frac * in_m.row(ty.hi * width + tx.hi));
    }
  }
  return out;
}

}  // namespace remn
