#pragma once

// Segmentation metrics: mIoU, foreground precision, and recall restricted to
// the discriminative (DR) and non-discriminative (NDR) parts of ground truth.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aslab/attribution.hpp"
#include "aslab/data.hpp"

namespace aslab {

/// Which part of its own class's ground truth a pixel belongs to.
enum class Region : std::uint8_t { kNone = 0, kDr = 1, kNdr = 2 };

class ConfusionAccumulator {
 public:
  /// num_classes includes background (ids 0..num_classes-1).
  explicit ConfusionAccumulator(std::size_t num_classes);

  /// Adds one image. Pixels with gt == 255 are skipped. `dr_gt` holds the DR/NDR
  /// partition of each ground-truth class; classes without one update only the
  /// confusion matrix and FG counters.
  void accumulate(const LabelMask& pred, const LabelMask& gt,
                  std::span<const RegionPartition> dr_gt);

  /// Adds `count` pixels with the given labels and region.
  void add(std::uint8_t gt, std::uint8_t pred, Region region, std::uint64_t count = 1);

  void merge(const ConfusionAccumulator& other);

  std::size_t num_classes() const noexcept { return n_; }
  std::uint64_t count(std::size_t gt, std::size_t pred) const { return matrix_[gt * n_ + pred]; }
  std::uint64_t dr_tp(std::size_t c) const { return dr_tp_[c]; }
  std::uint64_t dr_fn(std::size_t c) const { return dr_fn_[c]; }
  std::uint64_t ndr_tp(std::size_t c) const { return ndr_tp_[c]; }
  std::uint64_t ndr_fn(std::size_t c) const { return ndr_fn_[c]; }
  std::uint64_t fg_tp() const noexcept { return fg_tp_; }
  std::uint64_t fg_fp() const noexcept { return fg_fp_; }
  std::uint64_t total() const noexcept;
  std::size_t images() const noexcept { return images_; }
  void set_images(std::size_t n) noexcept { images_ = n; }

  bool operator==(const ConfusionAccumulator&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> matrix_;  // [gt][pred]
  std::vector<std::uint64_t> dr_tp_, dr_fn_, ndr_tp_, ndr_fn_;
  std::uint64_t fg_tp_ = 0, fg_fp_ = 0;
  std::size_t images_ = 0;
};

std::optional<double> class_iou(const ConfusionAccumulator& acc, std::size_t c);
/// Mean IoU over classes with a nonzero union. Throws ConfigError on an empty accumulator.
double miou(const ConfusionAccumulator& acc);
std::optional<double> fg_precision(const ConfusionAccumulator& acc);
std::optional<double> dr_recall(const ConfusionAccumulator& acc, std::size_t c);
std::optional<double> ndr_recall(const ConfusionAccumulator& acc, std::size_t c);
std::optional<double> class_recall(const ConfusionAccumulator& acc, std::size_t c);

/// TP_c == dr_tp + ndr_tp and GT row sum == |DR| + |NDR|: overall recall is the
/// size-weighted mean of DR- and NDR-recall. Holds for every class whose
/// ground truth was always accompanied by a partition.
bool recall_decomposition_holds(const ConfusionAccumulator& acc, std::size_t c);

struct MetricsReport {
  std::vector<std::optional<double>> iou;         // per class
  std::vector<std::optional<double>> dr_recall;   // per class
  std::vector<std::optional<double>> ndr_recall;  // per class
  double miou = 0.0;
  std::optional<double> fg_precision;
  std::optional<double> mean_dr_recall;   // mean of defined foreground values
  std::optional<double> mean_ndr_recall;
  float tau = 0.0f;
  std::size_t images = 0;

  bool operator==(const MetricsReport&) const = default;
  std::string to_json() const;
  /// Columns of csv_row(); fixed order.
  static std::string csv_header();
  std::string csv_row() const;
};

MetricsReport make_report(const ConfusionAccumulator& acc, float tau);

/// Formats an optional metric; undefined values print as "nan".
std::string format_metric(const std::optional<double>& v);

}  // namespace aslab
