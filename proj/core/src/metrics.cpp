#include "aslab/metrics.hpp"

#include <cstdio>
#include <numeric>

#include "aslab/error.hpp"
#include "json.hpp"

namespace aslab {
namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> mean_defined(const std::vector<std::optional<double>>& v, std::size_t from) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = from; i < v.size(); ++i)
    if (v[i]) {
      s += *v[i];
      ++n;
    }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

ConfusionAccumulator::ConfusionAccumulator(std::size_t num_classes)
    : n_(num_classes),
      matrix_(num_classes * num_classes, 0),
      dr_tp_(num_classes, 0),
      dr_fn_(num_classes, 0),
      ndr_tp_(num_classes, 0),
      ndr_fn_(num_classes, 0) {
  if (num_classes < 2 || num_classes > 255) {
    throw ConfigError("metrics: num_classes must lie in [2,255], got " +
                      std::to_string(num_classes));
  }
}

void ConfusionAccumulator::add(std::uint8_t gt, std::uint8_t pred, Region region,
                               std::uint64_t count) {
  if (gt == kIgnore) return;
  if (gt >= n_ || pred >= n_) {
    throw ConfigError("metrics: label " + std::to_string(gt >= n_ ? gt : pred) +
                      " outside 0.." + std::to_string(n_ - 1));
  }
  matrix_[gt * n_ + pred] += count;
  if (pred != kBackground) (pred == gt ? fg_tp_ : fg_fp_) += count;
  if (region == Region::kDr) (pred == gt ? dr_tp_ : dr_fn_)[gt] += count;
  if (region == Region::kNdr) (pred == gt ? ndr_tp_ : ndr_fn_)[gt] += count;
}

void ConfusionAccumulator::accumulate(const LabelMask& pred, const LabelMask& gt,
                                      std::span<const RegionPartition> dr_gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw ShapeError("metrics: prediction is " + std::to_string(pred.width) + "x" +
                     std::to_string(pred.height) + ", ground truth is " +
                     std::to_string(gt.width) + "x" + std::to_string(gt.height));
  }
  std::vector<const RegionPartition*> part(n_, nullptr);
  for (const RegionPartition& p : dr_gt) {
    if (p.width != gt.width || p.height != gt.height) {
      throw ShapeError("metrics: DR partition size differs from the ground truth");
    }
    if (p.class_id >= n_) throw ConfigError("metrics: partition class out of range");
    part[p.class_id] = &p;
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::uint8_t g = gt.pixels[i];
    Region r = Region::kNone;
    if (g < n_ && part[g])
      r = part[g]->high[i] ? Region::kDr : (part[g]->low[i] ? Region::kNdr : Region::kNone);
    add(g, pred.pixels[i], r);
  }
  ++images_;
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& o) {
  if (o.n_ != n_) throw ShapeError("metrics: cannot merge accumulators of different class counts");
  for (std::size_t i = 0; i < matrix_.size(); ++i) matrix_[i] += o.matrix_[i];
  for (std::size_t c = 0; c < n_; ++c) {
    dr_tp_[c] += o.dr_tp_[c];
    dr_fn_[c] += o.dr_fn_[c];
    ndr_tp_[c] += o.ndr_tp_[c];
    ndr_fn_[c] += o.ndr_fn_[c];
  }
  fg_tp_ += o.fg_tp_;
  fg_fp_ += o.fg_fp_;
  images_ += o.images_;
}

std::uint64_t ConfusionAccumulator::total() const noexcept {
  return std::accumulate(matrix_.begin(), matrix_.end(), std::uint64_t{0});
}

std::optional<double> class_iou(const ConfusionAccumulator& acc, std::size_t c) {
  std::uint64_t row = 0, col = 0;
  for (std::size_t k = 0; k < acc.num_classes(); ++k) {
    row += acc.count(c, k);
    col += acc.count(k, c);
  }
  const std::uint64_t tp = acc.count(c, c);
  return ratio(tp, row + col - tp);
}

double miou(const ConfusionAccumulator& acc) {
  if (acc.total() == 0) throw ConfigError("metrics: empty accumulator");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < acc.num_classes(); ++c)
    if (auto v = class_iou(acc, c)) {
      s += *v;
      ++n;
    }
  return s / static_cast<double>(n);
}

std::optional<double> fg_precision(const ConfusionAccumulator& acc) {
  return ratio(acc.fg_tp(), acc.fg_tp() + acc.fg_fp());
}

std::optional<double> dr_recall(const ConfusionAccumulator& acc, std::size_t c) {
  return ratio(acc.dr_tp(c), acc.dr_tp(c) + acc.dr_fn(c));
}

std::optional<double> ndr_recall(const ConfusionAccumulator& acc, std::size_t c) {
  return ratio(acc.ndr_tp(c), acc.ndr_tp(c) + acc.ndr_fn(c));
}

std::optional<double> class_recall(const ConfusionAccumulator& acc, std::size_t c) {
  std::uint64_t row = 0;
  for (std::size_t k = 0; k < acc.num_classes(); ++k) row += acc.count(c, k);
  return ratio(acc.count(c, c), row);
}

bool recall_decomposition_holds(const ConfusionAccumulator& acc, std::size_t c) {
  std::uint64_t row = 0;
  for (std::size_t k = 0; k < acc.num_classes(); ++k) row += acc.count(c, k);
  return acc.count(c, c) == acc.dr_tp(c) + acc.ndr_tp(c) &&
         row == acc.dr_tp(c) + acc.dr_fn(c) + acc.ndr_tp(c) + acc.ndr_fn(c);
}

MetricsReport make_report(const ConfusionAccumulator& acc, float tau) {
  MetricsReport r;
  const std::size_t n = acc.num_classes();
  for (std::size_t c = 0; c < n; ++c) {
    r.iou.push_back(class_iou(acc, c));
    r.dr_recall.push_back(c == 0 ? std::nullopt : dr_recall(acc, c));
    r.ndr_recall.push_back(c == 0 ? std::nullopt : ndr_recall(acc, c));
  }
  r.miou = miou(acc);
  r.fg_precision = fg_precision(acc);
  r.mean_dr_recall = mean_defined(r.dr_recall, 1);
  r.mean_ndr_recall = mean_defined(r.ndr_recall, 1);
  r.tau = tau;
  r.images = acc.images();
  return r;
}

std::string format_metric(const std::optional<double>& v) {
  if (!v) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  return buf;
}

std::string MetricsReport::csv_header() {
  return "tau,images,miou,fg_precision,dr_recall,ndr_recall";
}

std::string MetricsReport::csv_row() const {
  char tau_buf[32];
  std::snprintf(tau_buf, sizeof tau_buf, "%.9g", static_cast<double>(tau));
  return std::string(tau_buf) + "," + std::to_string(images) + "," + format_metric(miou) + "," +
         format_metric(fg_precision) + "," + format_metric(mean_dr_recall) + "," +
         format_metric(mean_ndr_recall);
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["tau"] = tau;
  j["images"] = images;
  j["miou"] = miou;
  j["fg_precision"] = opt_json(fg_precision);
  j["dr_recall"] = opt_json(mean_dr_recall);
  j["ndr_recall"] = opt_json(mean_ndr_recall);
  auto arr = [](const std::vector<std::optional<double>>& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& x : v) a.push_back(opt_json(x));
    return a;
  };
  j["class_iou"] = arr(iou);
  j["class_dr_recall"] = arr(dr_recall);
  j["class_ndr_recall"] = arr(ndr_recall);
  return j.dump(2);
}

}  // namespace aslab
