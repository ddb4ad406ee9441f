#pragma once

// Class activation maps, gradient saliency maps and the region partitions
// of ground truth they induce.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aslab/data.hpp"
#include "aslab/model.hpp"
#include "aslab/tensor.hpp"

namespace aslab {

inline constexpr float kDefaultTauCam = 0.25f;
inline constexpr float kDefaultTauSm = 0.15f;

/// Per-pixel map for one class. `class_id` is whatever label the caller
/// attaches; the compute functions store the model's logit index, and
/// segmentation code relabels it to the mask id.
struct ScoreMap {
  std::size_t class_id = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> values;
  bool normalized = false;
  bool degenerate = false;  // normalized map whose raw maximum was <= 0

  ScoreMap() = default;
  ScoreMap(std::size_t cls, std::size_t w, std::size_t h, float fill = 0.0f)
      : class_id(cls), width(w), height(h), values(w * h, fill) {}

  float at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  float& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  std::size_t size() const noexcept { return values.size(); }
  float max_value() const;
};

/// w . a accumulated with madd() over channels in ascending order. Every
/// CAM value and every hyperplane distance goes through this one function.
float class_projection(std::span<const float> w, std::span<const float> a);

/// Raw w_c^T A at every pixel of a [k,H,W] activation.
ScoreMap cam_from_activation(const Tensor& activation, std::span<const float> w,
                             std::size_t class_id);

/// Negatives clamped to 0, then divided by the maximum Z. If Z <= 0 the result
/// is all zero and flagged degenerate.
ScoreMap max_normalize(const ScoreMap& raw);

ScoreMap compute_cam_raw(const Model& model, const Tensor& image, std::size_t class_index);
ScoreMap compute_cam(const Model& model, const Tensor& image, std::size_t class_index);

/// max over image channels of |dS_c/dI| from a single backward pass.
ScoreMap saliency_from_gradient(const Tensor& input_grad, std::size_t class_id);
ScoreMap compute_saliency_raw(const Model& model, const Tensor& image, std::size_t class_index);
ScoreMap compute_saliency(const Model& model, const Tensor& image, std::size_t class_index);

/// Nearest-neighbour resize of a map to the given size.
ScoreMap upsample_map(const ScoreMap& map, std::size_t width, std::size_t height);

/// Ground-truth pixels of one class split by `value >= threshold`.
/// high/low are DR/NDR for CAMs and HSR/LSR for saliency maps.
struct RegionPartition {
  std::size_t class_id = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> high;
  std::vector<std::uint8_t> low;
  float threshold = 0.0f;
  std::size_t high_count = 0;
  std::size_t low_count = 0;
};

/// Requires a normalized map of the mask's size.
RegionPartition partition_by_threshold(const ScoreMap& map, const LabelMask& gt,
                                       std::uint8_t class_id, float tau);
RegionPartition partition_dr_ndr(const ScoreMap& cam, const LabelMask& gt, std::uint8_t class_id,
                                 float tau_cam = kDefaultTauCam);
RegionPartition partition_hsr_lsr(const ScoreMap& sm, const LabelMask& gt, std::uint8_t class_id,
                                  float tau_sm = kDefaultTauSm);

/// PGM-ready mask: 1 = high region, 2 = low region, 0 elsewhere.
LabelMask partition_mask(const RegionPartition& p);

/// Maps stacked as [n,H,W] and back; class ids become 0..n-1 (or `ids`).
Tensor stack_maps(std::span<const ScoreMap> maps);
std::vector<ScoreMap> unstack_maps(const Tensor& stack, bool normalized,
                                   std::span<const std::size_t> ids = {});

}  // namespace aslab
