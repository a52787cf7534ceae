#include "remn/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace remn::metrics {

namespace {

void check_sequences(const std::vector<LabelMask>& pred, const std::vector<LabelMask>& gt, const char* what) {
  if (pred.size() != gt.size()) {
    throw ArgumentError(std::string(what) + ": sequence lengths differ (" + std::to_string(pred.size()) + " vs " +
                        std::to_string(gt.size()) + ")");
  }
  for (std::size_t t = 0; t < pred.size(); ++t) require_same_shape(pred[t], gt[t], what);
}

int object_count(const std::vector<LabelMask>& pred, const std::vector<LabelMask>& gt) {
  int objects = 0;
  for (const auto& m : pred) objects = std::max(objects, max_label(m));
  for (const auto& m : gt) objects = std::max(objects, max_label(m));
  return objects;
}

// Mean of score(pred_slice, gt_slice) over frames 1.. and objects 1..K.
template <typename Score>
double sequence_mean(const std::vector<LabelMask>& pred, const std::vector<LabelMask>& gt, Score score) {
  const int objects = object_count(pred, gt);
  if (objects == 0 || pred.size() < 2) return 1.0;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 1; t < pred.size(); ++t) {
    for (int id = 1; id <= objects; ++id) {
      total += score(object_slice(pred[t], id), object_slice(gt[t], id));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

// Fraction of `from` boundary pixels that have a `to` boundary pixel within the radius.
double matched_fraction(const BinaryMask& from, const BinaryMask& to, const std::vector<std::pair<Index, Index>>& disk) {
  Index hits = 0, total = 0;
  for (Index y = 0; y < from.rows(); ++y) {
    for (Index x = 0; x < from.cols(); ++x) {
      if (!from(y, x)) continue;
      ++total;
      for (const auto& [dy, dx] : disk) {
        const Index yy = y + dy, xx = x + dx;
        if (yy >= 0 && yy < to.rows() && xx >= 0 && xx < to.cols() && to(yy, xx)) {
          ++hits;
          break;
        }
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

double iou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) throw ArgumentError("iou: mask shapes differ");
  const auto uni = (pred || gt).count();
  if (uni == 0) return 1.0;
  return static_cast<double>((pred && gt).count()) / static_cast<double>(uni);
}

BinaryMask boundary(const BinaryMask& mask) {
  BinaryMask out = BinaryMask::Constant(mask.rows(), mask.cols(), false);
  for (Index y = 0; y < mask.rows(); ++y) {
    for (Index x = 0; x < mask.cols(); ++x) {
      if (!mask(y, x)) continue;
      out(y, x) = (y > 0 && !mask(y - 1, x)) || (y + 1 < mask.rows() && !mask(y + 1, x)) ||
                  (x > 0 && !mask(y, x - 1)) || (x + 1 < mask.cols() && !mask(y, x + 1));
    }
  }
  return out;
}

double boundary_f(const BinaryMask& pred, const BinaryMask& gt, double tolerance) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) throw ArgumentError("boundary_f: mask shapes differ");
  const BinaryMask pb = boundary(pred), gb = boundary(gt);
  const bool pred_empty = pb.count() == 0, gt_empty = gb.count() == 0;
  if (pred_empty && gt_empty) return 1.0;
  if (pred_empty || gt_empty) return 0.0;
  std::vector<std::pair<Index, Index>> disk;
  const auto r = static_cast<Index>(std::floor(tolerance));
  for (Index dy = -r; dy <= r; ++dy) {
    for (Index dx = -r; dx <= r; ++dx) {
      if (static_cast<double>(dy * dy + dx * dx) <= tolerance * tolerance) disk.emplace_back(dy, dx);
    }
  }
  const double precision = matched_fraction(pb, gb, disk);
  const double recall = matched_fraction(gb, pb, disk);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double default_tolerance(Index height, Index width) {
  const double diagonal = std::hypot(static_cast<double>(height), static_cast<double>(width));
  return std::max(1.0, std::ceil(0.008 * diagonal));
}

double metric_j(const std::vector<LabelMask>& pred, const std::vector<LabelMask>& gt) {
  check_sequences(pred, gt, "metric_j");
  return sequence_mean(pred, gt, [](const BinaryMask& p, const BinaryMask& g) { return iou(p, g); });
}

double metric_f(const std::vector<LabelMask>& pred, const std::vector<LabelMask>& gt, double tolerance) {
  check_sequences(pred, gt, "metric_f");
  if (gt.empty()) return 1.0;
  const double tol = tolerance > 0.0 ? tolerance : default_tolerance(gt.front().rows(), gt.front().cols());
  return sequence_mean(pred, gt, [tol](const BinaryMask& p, const BinaryMask& g) { return boundary_f(p, g, tol); });
}

std::optional<double> redundancy_score(const Bank& bank) {
  if (bank.size() < 2) return std::nullopt;
  RowMatrix<Real> pooled(bank.size(), bank.key_channels());
  for (Index t = 0; t < bank.size(); ++t) {
    pooled.row(t) = bank.entries()[static_cast<std::size_t>(t)].key.matrix().colwise().mean();
  }
  double total = 0.0;
  Index pairs = 0;
  for (Index a = 0; a < pooled.rows(); ++a) {
    for (Index b = a + 1; b < pooled.rows(); ++b) {
      const double denom = pooled.row(a).norm() * pooled.row(b).norm();
      total += denom > 0.0 ? pooled.row(a).dot(pooled.row(b)) / denom : 0.0;
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

}  // namespace remn::metrics
