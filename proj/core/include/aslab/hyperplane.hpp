#pragma once

// Signed distances of ground-truth pixels to the CAM hyperplane (activation
// space) and to the pair of saliency hyperplanes (GAP-gradient space).

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aslab/attribution.hpp"
#include "aslab/data.hpp"
#include "aslab/model.hpp"

namespace aslab {

/// d GAP(A)_j / d I for every GAP channel j: k backward passes, each seeding
/// one pooled channel with 1. Result is [k, C, H, W].
Tensor gap_input_jacobian(const Model& model, const Tensor& image);

/// (w.a / Z - tau) / ||w / Z||. Throws NumericError when Z <= 0.
float cam_signed_distance(std::span<const float> a, std::span<const float> w, float z, float tau);

/// (|w.a'| / Z_sm - tau) / (||w|| / Z_sm), Z_sm being the saliency map's
/// per-image maximum. Throws NumericError when Z_sm <= 0.
float sm_signed_distance(std::span<const float> a_prime, std::span<const float> w, float z_sm,
                         float tau);

/// Distances are "inside" when their sign bit is clear (0 counts as inside).
bool on_positive_side(float distance) noexcept;

enum class Quadrant : std::uint8_t { kHsrDr = 0, kLsrDr = 1, kHsrNdr = 2, kLsrNdr = 3 };
const char* quadrant_name(Quadrant q);

struct PixelGeometry {
  std::size_t i = 0;  // row
  std::size_t j = 0;  // column
  float cam_dist = 0.0f;
  float sm_dist = 0.0f;
  Quadrant quadrant = Quadrant::kLsrNdr;
};

struct QuadrantReport {
  std::size_t class_id = 0;
  float tau_cam = kDefaultTauCam;
  float tau_sm = kDefaultTauSm;
  std::size_t total = 0;
  std::array<std::size_t, 4> counts{};
  std::array<double, 4> fractions{};

  std::string to_json() const;
};

struct QuadrantAnalysis {
  QuadrantReport report;
  std::vector<PixelGeometry> pixels;  // raster order over GT pixels
  ScoreMap cam;                       // normalized CAM
  ScoreMap saliency;                  // normalized saliency rebuilt from the jacobian
  RegionPartition dr;                 // DR/NDR from `cam`
  RegionPartition hsr;                // HSR/LSR from `saliency`
  std::size_t cam_sign_mismatches = 0;
  std::size_t sm_sign_mismatches = 0;
};

/// Saliency max_ch |w . a'| per pixel from a jacobian [k,C,H,W].
ScoreMap saliency_from_jacobian(const Tensor& jacobian, std::span<const float> w,
                                std::size_t class_id);

/// Cross of DR/NDR and HSR/LSR over the pixels of gt == label.
/// Throws ConfigError when the label is absent from gt and NumericError when
/// either normalizer is degenerate.
QuadrantAnalysis quadrant_decomposition(const Model& model, const Tensor& image,
                                        const LabelMask& gt, std::size_t class_index,
                                        std::uint8_t label, float tau_cam = kDefaultTauCam,
                                        float tau_sm = kDefaultTauSm);

/// Header "pixel_i,pixel_j,cam_dist,sm_dist,quadrant".
std::string quadrant_csv(std::span<const PixelGeometry> pixels);

}  // namespace aslab
