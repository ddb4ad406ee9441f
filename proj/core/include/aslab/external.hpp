#pragma once

// Score maps and masks produced outside this library, listed in a CSV
// manifest:
//
//   maps,cams,gt,pred,image,class_ids
//   a/maps.fmap,a/cams.fmap,a/gt.pgm,,,3;15
//
// The header names the columns present (any order). maps and cams are FMAP
// stacks [n,H,W] of max-normalized per-class maps, class_ids lists the label
// id of each plane separated by ';'. Relative paths resolve against the
// manifest's directory; empty cells mean "absent".

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aslab/experiment.hpp"

namespace aslab {

struct ExternalRecord {
  std::vector<ScoreMap> maps;
  std::vector<ScoreMap> cams;  // empty: DR/NDR counters stay unset
  LabelMask gt;
  LabelMask pred;              // size 0 when absent
  Tensor image;                // needed by the superpixel resolve
};

std::vector<ExternalRecord> load_manifest(const std::filesystem::path& path);

/// DR/NDR partition of every class in `cams` at tau_cam.
std::vector<RegionPartition> record_partitions(const ExternalRecord& r, float tau_cam);

/// Resolve-ready form of the record's maps per eval.resolve.
SweepItem record_sweep_item(const ExternalRecord& r, const EvalConfig& eval);

/// Best-tau sweep over all records.
ThresholdSweep sweep_records(std::span<const ExternalRecord> records, const EvalConfig& eval,
                             std::size_t num_classes);

/// Metrics of the records' `pred` masks (no thresholding).
MetricsReport evaluate_records(std::span<const ExternalRecord> records, float tau_cam,
                               std::size_t num_classes);

}  // namespace aslab
