#pragma once

// Best-threshold search: evaluate a resolve at every tau of a grid and keep
// the tau with the highest mIoU (ties -> smallest tau).

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aslab/metrics.hpp"
#include "aslab/resolve.hpp"

namespace aslab {

/// One evaluated image: resolved scores, ground truth, DR/NDR partitions.
struct SweepItem {
  ResolvedScores prepared;
  LabelMask gt;
  std::vector<RegionPartition> dr;
};

/// float(k / 100.0) for k = 1..50.
std::vector<float> default_tau_grid();

struct ThresholdSweep {
  std::vector<MetricsReport> per_tau;  // grid order
  std::size_t best_index = 0;
  float best_tau = 0.0f;
  MetricsReport best;

  /// Header MetricsReport::csv_header(), one row per tau.
  std::string csv() const;
};

/// Picks the first maximum of mIoU.
ThresholdSweep select_best(std::vector<MetricsReport> per_tau);

/// Single pass over the pixels: each pixel is bucketed by how many grid values
/// it clears, and the confusion at every tau is assembled from bucket sums.
/// The grid must be strictly increasing.
ThresholdSweep threshold_sweep(std::span<const SweepItem> items, std::span<const float> grid,
                               std::size_t num_classes);

using ResolveFn = std::function<LabelMask(const SweepItem&, float)>;

/// Reference path: calls `resolve` and re-accumulates every image at every tau.
ThresholdSweep threshold_sweep_naive(std::span<const SweepItem> items,
                                     std::span<const float> grid, std::size_t num_classes,
                                     const ResolveFn& resolve);

}  // namespace aslab
