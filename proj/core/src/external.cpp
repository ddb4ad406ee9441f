#include "aslab/external.hpp"

#include <map>
#include <sstream>

#include "aslab/error.hpp"
#include "aslab/formats.hpp"
#include "file_io.hpp"

namespace aslab {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::size_t> parse_ids(const std::string& text, const std::string& where) {
  std::vector<std::size_t> ids;
  for (const std::string& s : split(text, ';')) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(s, &used);
      if (used != s.size() || v == 0 || v > 254) throw std::out_of_range(s);
      ids.push_back(v);
    } catch (const std::exception&) {
      throw FormatError(where + ": class id '" + s + "' must be an integer in 1..254");
    }
  }
  return ids;
}

}  // namespace

std::vector<ExternalRecord> load_manifest(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path);
  std::stringstream in(std::string(bytes.begin(), bytes.end()));
  const std::filesystem::path base = path.parent_path();
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty manifest");
  const std::vector<std::string> header = split(line, ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    static const char* known[] = {"maps", "cams", "gt", "pred", "image", "class_ids"};
    bool ok = false;
    for (const char* k : known) ok = ok || header[i] == k;
    if (!ok) throw FormatError(path.string() + ": unknown manifest column '" + header[i] + "'");
    col[header[i]] = i;
  }
  if (!col.count("gt")) throw FormatError(path.string() + ": manifest needs a gt column");

  std::vector<ExternalRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::string where = path.string() + ":" + std::to_string(row);
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw FormatError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(cells.size()));
    }
    auto cell = [&](const char* name) -> std::string {
      const auto it = col.find(name);
      return it == col.end() ? std::string() : cells[it->second];
    };
    auto resolve = [&](const std::string& p) { return base / p; };

    ExternalRecord r;
    r.gt = read_mask_pgm(resolve(cell("gt")));
    std::vector<std::size_t> ids;
    if (!cell("class_ids").empty()) ids = parse_ids(cell("class_ids"), where);
    auto load_stack = [&](const char* name) {
      const std::string file = cell(name);
      if (file.empty()) return std::vector<ScoreMap>();
      if (ids.empty()) throw FormatError(where + ": " + name + " given without class_ids");
      std::vector<ScoreMap> maps = unstack_maps(read_fmap(resolve(file)), true, ids);
      if (maps[0].width != r.gt.width || maps[0].height != r.gt.height) {
        throw ShapeError(where + ": " + name + " size differs from the ground truth");
      }
      return maps;
    };
    r.maps = load_stack("maps");
    r.cams = load_stack("cams");
    if (!cell("pred").empty()) r.pred = read_mask_pgm(resolve(cell("pred")));
    if (!cell("image").empty()) r.image = read_fmap(resolve(cell("image")));
    records.push_back(std::move(r));
  }
  if (records.empty()) throw FormatError(path.string() + ": manifest lists no records");
  return records;
}

std::vector<RegionPartition> record_partitions(const ExternalRecord& r, float tau_cam) {
  std::vector<RegionPartition> parts;
  for (const ScoreMap& cam : r.cams) {
    parts.push_back(partition_dr_ndr(cam, r.gt, static_cast<std::uint8_t>(cam.class_id), tau_cam));
  }
  return parts;
}

SweepItem record_sweep_item(const ExternalRecord& r, const EvalConfig& eval) {
  if (r.maps.empty()) throw ConfigError("sweep: record has no score maps");
  SweepItem item;
  item.prepared = prepare_resolve(r.maps, eval, r.image);
  item.gt = r.gt;
  item.dr = record_partitions(r, eval.tau_cam);
  return item;
}

ThresholdSweep sweep_records(std::span<const ExternalRecord> records, const EvalConfig& eval,
                             std::size_t num_classes) {
  std::vector<SweepItem> items;
  for (const ExternalRecord& r : records) items.push_back(record_sweep_item(r, eval));
  return threshold_sweep(items, eval.tau_grid, num_classes);
}

MetricsReport evaluate_records(std::span<const ExternalRecord> records, float tau_cam,
                               std::size_t num_classes) {
  ConfusionAccumulator acc(num_classes);
  for (const ExternalRecord& r : records) {
    if (r.pred.size() == 0) throw ConfigError("evaluate: record has no pred mask");
    acc.accumulate(r.pred, r.gt, record_partitions(r, tau_cam));
  }
  return make_report(acc, 0.0f);
}

}  // namespace aslab
