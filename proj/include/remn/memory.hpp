#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "remn/masks.hpp"
#include "remn/tensor.hpp"

namespace remn::memory {

/// One stored frame: a key map shared by all objects and one value map per object.
template <typename Scalar>
struct BankEntry {
  DenseArray<Scalar> key;                  // H x W x Ck
  std::vector<DenseArray<Scalar>> values;  // K maps of H x W x Cv
  Index frame_index = 0;
};

/// Ordered key/value store consulted by every query frame.
///
/// Capacity is only enforced on insertion: a bank that holds N entries
/// refuses further inserts until it has been compressed. An unbounded bank
/// (no capacity) grows without limit.
template <typename Scalar>
class MemoryBank {
 public:
  using Entry = BankEntry<Scalar>;

  MemoryBank() = default;
  explicit MemoryBank(std::optional<Index> capacity) : capacity_(capacity) {
    if (capacity_ && *capacity_ < 1) throw ArgumentError("MemoryBank: capacity must be >= 1");
  }

  const std::vector<Entry>& entries() const { return entries_; }
  Index size() const { return static_cast<Index>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  const std::optional<Index>& capacity() const { return capacity_; }
  bool full() const { return capacity_ && size() >= *capacity_; }
  const LabelMask& latest_mask() const { return latest_mask_; }

  Index height() const { return entries_.front().key.extent(0); }
  Index width() const { return entries_.front().key.extent(1); }
  Index key_channels() const { return entries_.front().key.extent(2); }
  Index value_channels() const { return entries_.front().values.front().extent(2); }
  Index objects() const { return static_cast<Index>(entries_.front().values.size()); }

  /// Appends an entry and makes `mask` the latest memory mask.
  void insert(Entry entry, LabelMask mask) {
    check_entry(entry);
    if (full()) throw StateError("MemoryBank: insert into a full bank (compress first)");
    if (!empty() && entry.frame_index <= entries_.back().frame_index) {
      throw ArgumentError("MemoryBank: frame indices must increase");
    }
    entries_.push_back(std::move(entry));
    latest_mask_ = std::move(mask);
  }

  /// Swaps in a new entry list (used by compression); the latest mask is kept.
  void replace_entries(std::vector<Entry> entries) {
    if (entries.empty()) throw StateError("MemoryBank: replacement would empty the bank");
    if (capacity_ && static_cast<Index>(entries.size()) > *capacity_) {
      throw StateError("MemoryBank: replacement exceeds capacity");
    }
    entries_ = std::move(entries);
  }

  /// All memory keys as a (T*H*W) x Ck matrix, entry-major.
  RowMatrix<Scalar> stacked_keys() const {
    return stack([](const Entry& e) -> const DenseArray<Scalar>& { return e.key; });
  }

  /// One object's memory values as a (T*H*W) x Cv matrix.
  RowMatrix<Scalar> stacked_values(Index object) const {
    if (object < 0 || object >= objects()) {
      throw ArgumentError("MemoryBank: object " + std::to_string(object) + " out of range");
    }
    return stack([object](const Entry& e) -> const DenseArray<Scalar>& {
      return e.values[static_cast<std::size_t>(object)];
    });
  }

 private:
  template <typename Pick>
  RowMatrix<Scalar> stack(Pick pick) const {
    if (empty()) throw StateError("MemoryBank: bank is empty");
    const Index pixels = height() * width();
    const Index channels = pick(entries_.front()).extent(2);
    RowMatrix<Scalar> out(size() * pixels, channels);
    for (Index t = 0; t < size(); ++t) {
      out.middleRows(t * pixels, pixels) = pick(entries_[static_cast<std::size_t>(t)]).matrix();
    }
    return out;
  }

  void check_entry(const Entry& entry) const {
    require_rank(entry.key, 3, "bank key");
    if (entry.values.empty()) throw ArgumentError("MemoryBank: entry needs at least one object value");
    for (const auto& v : entry.values) {
      require_rank(v, 3, "bank value");
      if (v.extent(0) != entry.key.extent(0) || v.extent(1) != entry.key.extent(1)) {
        throw ArgumentError("MemoryBank: value spatial size differs from key");
      }
      if (v.shape() != entry.values.front().shape()) {
        throw ArgumentError("MemoryBank: object values differ in shape");
      }
    }
    if (empty()) return;
    const Entry& first = entries_.front();
    if (entry.key.shape() != first.key.shape() || entry.values.size() != first.values.size() ||
        entry.values.front().shape() != first.values.front().shape()) {
      throw ArgumentError("MemoryBank: entry shape " + shape_string(entry.key.shape()) +
                          " does not match bank " + shape_string(first.key.shape()));
    }
  }

  std::optional<Index> capacity_;
  std::vector<Entry> entries_;
  LabelMask latest_mask_;
};

/// Column-stochastic (T*H*W) x (H*W) matrix: column j is a distribution over
/// memory pixels for query pixel j.
template <typename Scalar>
struct Affinity {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weights;
};

/// W(i, j) = softmax_i(-|k_i - q_j|^2).
///
/// Uses -|k|^2 + 2 k.q; the |q_j|^2 term is constant in each column and
/// cancels in the softmax, so it is never formed.
template <typename Scalar, typename DerivedK, typename DerivedQ>
Affinity<Scalar> affinity_from_matrices(const Eigen::MatrixBase<DerivedK>& memory_keys,
                                        const Eigen::MatrixBase<DerivedQ>& query_keys) {
  if (memory_keys.cols() != query_keys.cols()) {
    throw ArgumentError("compute_affinity: key channel mismatch");
  }
  Affinity<Scalar> aff;
  aff.weights.noalias() = Scalar(2) * memory_keys * query_keys.transpose();
  aff.weights.colwise() -= memory_keys.rowwise().squaredNorm();
  for (Index j = 0; j < aff.weights.cols(); ++j) {
    auto col = aff.weights.col(j);
    col.array() = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
  return aff;
}

template <typename Scalar>
Affinity<Scalar> compute_affinity(const MemoryBank<Scalar>& bank, const DenseArray<Scalar>& query_key) {
  if (bank.empty()) throw StateError("compute_affinity: memory bank is empty");
  require_rank(query_key, 3, "compute_affinity query");
  if (query_key.extent(0) != bank.height() || query_key.extent(1) != bank.width()) {
    throw ArgumentError("compute_affinity: query size differs from memory");
  }
  return affinity_from_matrices<Scalar>(bank.stacked_keys(), query_key.matrix());
}

/// v_j = sum_i W(i, j) v_i for one object; result is H x W x Cv.
template <typename Scalar>
DenseArray<Scalar> readout(const Affinity<Scalar>& aff, const MemoryBank<Scalar>& bank, Index object) {
  const auto values = bank.stacked_values(object);
  if (values.rows() != aff.weights.rows()) {
    throw ArgumentError("readout: affinity rows do not match memory pixels");
  }
  DenseArray<Scalar> out({bank.height(), bank.width(), values.cols()});
  if (out.matrix().rows() != aff.weights.cols()) {
    throw ArgumentError("readout: affinity columns do not match query pixels");
  }
  out.matrix().noalias() = aff.weights.transpose() * values;
  return out;
}

}  // namespace remn::memory
