#include "aslab/sweep.hpp"

#include <algorithm>

#include "aslab/error.hpp"

namespace aslab {
namespace {

void check_grid(std::span<const float> grid) {
  if (grid.empty()) throw ConfigError("sweep: empty tau grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("sweep: tau grid must be strictly increasing");
}

Region region_of(const SweepItem& item, std::size_t p, std::vector<const RegionPartition*>& part) {
  const std::uint8_t g = item.gt.pixels[p];
  if (g >= part.size() || !part[g]) return Region::kNone;
  return part[g]->high[p] ? Region::kDr : (part[g]->low[p] ? Region::kNdr : Region::kNone);
}

}  // namespace

std::vector<float> default_tau_grid() {
  std::vector<float> g;
  for (int k = 1; k <= 50; ++k) g.push_back(static_cast<float>(k / 100.0));
  return g;
}

std::string ThresholdSweep::csv() const {
  std::string out = MetricsReport::csv_header() + "\n";
  for (const MetricsReport& r : per_tau) out += r.csv_row() + "\n";
  return out;
}

ThresholdSweep select_best(std::vector<MetricsReport> per_tau) {
  if (per_tau.empty()) throw ConfigError("sweep: no reports");
  ThresholdSweep s;
  for (std::size_t i = 1; i < per_tau.size(); ++i)
    if (per_tau[i].miou > per_tau[s.best_index].miou) s.best_index = i;
  s.best = per_tau[s.best_index];
  s.best_tau = s.best.tau;
  s.per_tau = std::move(per_tau);
  return s;
}

ThresholdSweep threshold_sweep(std::span<const SweepItem> items, std::span<const float> grid,
                               std::size_t num_classes) {
  check_grid(grid);
  const std::size_t k = grid.size(), n = num_classes;
  // hist[((b * n + gt) * n + label) * 3 + region]
  std::vector<std::uint64_t> hist((k + 1) * n * n * 3, 0);
  for (const SweepItem& item : items) {
    const ResolvedScores& r = item.prepared;
    if (r.width != item.gt.width || r.height != item.gt.height) {
      throw ShapeError("sweep: scores and ground truth differ in size");
    }
    std::vector<const RegionPartition*> part(n, nullptr);
    for (const RegionPartition& p : item.dr)
      if (p.class_id < n) part[p.class_id] = &p;
    for (std::size_t p = 0; p < item.gt.size(); ++p) {
      const std::uint8_t g = item.gt.pixels[p];
      if (g == kIgnore) continue;
      const std::uint8_t l = r.label[p];
      if (g >= n || l >= n) throw ConfigError("sweep: label outside the class range");
      const std::size_t b = static_cast<std::size_t>(
          std::upper_bound(grid.begin(), grid.end(), r.score[p]) - grid.begin());
      ++hist[((b * n + g) * n + l) * 3 + static_cast<std::size_t>(region_of(item, p, part))];
    }
  }
  std::vector<MetricsReport> reports;
  for (std::size_t t = 0; t < k; ++t) {
    ConfusionAccumulator acc(n);
    for (std::size_t b = 0; b <= k; ++b) {
      const bool foreground = b > t;  // score clears grid[t]
      for (std::size_t g = 0; g < n; ++g)
        for (std::size_t l = 0; l < n; ++l)
          for (std::size_t reg = 0; reg < 3; ++reg) {
            const std::uint64_t c = hist[((b * n + g) * n + l) * 3 + reg];
            if (c == 0) continue;
            acc.add(static_cast<std::uint8_t>(g),
                    foreground ? static_cast<std::uint8_t>(l) : kBackground,
                    static_cast<Region>(reg), c);
          }
    }
    acc.set_images(items.size());
    reports.push_back(make_report(acc, grid[t]));
  }
  return select_best(std::move(reports));
}

ThresholdSweep threshold_sweep_naive(std::span<const SweepItem> items,
                                     std::span<const float> grid, std::size_t num_classes,
                                     const ResolveFn& resolve) {
  check_grid(grid);
  std::vector<MetricsReport> reports;
  for (float tau : grid) {
    ConfusionAccumulator acc(num_classes);
    for (const SweepItem& item : items) acc.accumulate(resolve(item, tau), item.gt, item.dr);
    reports.push_back(make_report(acc, tau));
  }
  return select_best(std::move(reports));
}

}  // namespace aslab
