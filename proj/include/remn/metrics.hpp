#pragma once

#include <optional>
#include <vector>

#include "remn/masks.hpp"
#include "remn/pipeline.hpp"

namespace remn::metrics {

/// IoU of two binary masks; 1 when both are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt);

/// Foreground pixels with at least one 4-neighbour outside the mask.
/// Pixels on the image border only count neighbours inside the image.
BinaryMask boundary(const BinaryMask& mask);

/// Boundary F-measure with a Euclidean matching radius `tolerance` (pixels).
double boundary_f(const BinaryMask& pred, const BinaryMask& gt, double tolerance);

/// max(1, ceil(0.008 * image diagonal)).
double default_tolerance(Index height, Index width);

/// Mean IoU over frames 1.. and objects 1..K, K the largest label in either sequence.
double metric_j(const std::vector<LabelMask>& pred, const std::vector<LabelMask>& gt);

/// Mean boundary F over frames 1.. and objects; tolerance <= 0 selects the default.
double metric_f(const std::vector<LabelMask>& pred, const std::vector<LabelMask>& gt, double tolerance = 0.0);

/// Mean pairwise cosine similarity of the spatially pooled keys of a bank.
/// Empty when the bank holds fewer than two entries.
std::optional<double> redundancy_score(const Bank& bank);

}  // namespace remn::metrics
