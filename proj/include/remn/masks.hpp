#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "remn/errors.hpp"

namespace remn {

// Full-resolution label map: 0 is background, 1..K are object ids.
using LabelMask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BinaryMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline BinaryMask object_slice(const LabelMask& mask, int object_id) {
  return mask.array() == static_cast<std::uint8_t>(object_id);
}

inline BinaryMask foreground(const LabelMask& mask) { return mask.array() > std::uint8_t{0}; }

inline LabelMask to_label_mask(const BinaryMask& mask) {
  return mask.cast<std::uint8_t>().matrix();
}

inline int max_label(const LabelMask& mask) {
  return mask.size() == 0 ? 0 : static_cast<int>(mask.maxCoeff());
}

inline void require_same_shape(const LabelMask& a, const LabelMask& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ArgumentError(std::string(what) + ": mask shapes differ");
  }
}

}  // namespace remn
