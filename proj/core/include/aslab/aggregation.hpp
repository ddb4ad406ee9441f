#pragma once

// Stochastic aggregation of saliency maps over perturbed copies of an image.
//
// Sample i always draws from Rng(split_seed(seed, i)), and the per-sample maps
// are reduced in ascending i, so every result is independent of the worker
// count. All functions return the raw (unnormalized) aggregate; apply
// max_normalize for the [0,1] form.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aslab/attribution.hpp"
#include "aslab/model.hpp"
#include "aslab/rng.hpp"

namespace aslab {

inline constexpr double kDefaultSmoothGradSigma = 0.5;
inline constexpr std::size_t kDefaultSmoothGradSamples = 50;
inline constexpr double kDefaultBinaryMaskP = 0.9;
inline constexpr double kDefaultPatchErase = 0.1;
inline constexpr std::size_t kDefaultPatchGrid = 16;
inline constexpr double kDefaultDiscAlpha = 0.4;
inline constexpr double kDefaultDiscBeta = 0.7;

enum class CropNormalization {
  kCoverage,    // per-pixel sum of w_i SM_i divided by the sum of covering w_i
  kStrictMean,  // sum of w_i SM_i divided by n
};

struct CropPlan {
  std::size_t n_crops = 100;
  double area_min = 0.1;
  double area_max = 0.5;
  double aspect_min = 3.0 / 4.0;
  double aspect_max = 4.0 / 3.0;
  CropNormalization normalization = CropNormalization::kCoverage;
};

void validate(const CropPlan& plan);

/// Axis-aligned crop window in pixels.
struct CropBox {
  std::size_t y0 = 0, x0 = 0, height = 0, width = 0;
};

/// Draws one crop: area fraction and aspect ratio (width/height) uniform in
/// the plan's ranges, sides rounded and clamped to the image, then a uniform
/// top-left corner.
CropBox sample_crop(Rng& rng, const CropPlan& plan, std::size_t height, std::size_t width);

/// Sub-image [C, box.height, box.width].
Tensor crop_image(const Tensor& image, const CropBox& box);

/// Cell boundaries of a grid x grid partition of `extent` pixels; the last cell
/// absorbs the remainder. Returns grid+1 offsets (grid is clamped to extent).
std::vector<std::size_t> grid_edges(std::size_t extent, std::size_t grid);

/// Zeroes every pixel (all channels) of the cells with erase[cy*grid+cx] != 0.
Tensor erase_cells(const Tensor& image, std::size_t grid, std::span<const std::uint8_t> erase);

/// Gaussian noise I + eps, eps ~ N(0, sigma^2).
ScoreMap smoothgrad(const Model& model, const Tensor& image, std::size_t class_index,
                    double sigma = kDefaultSmoothGradSigma,
                    std::size_t n = kDefaultSmoothGradSamples, std::uint64_t seed = 0);

/// Masking I * m, m ~ Bernoulli(p) per pixel (shared across channels); p in (0,1].
ScoreMap binarymask(const Model& model, const Tensor& image, std::size_t class_index,
                    double p = kDefaultBinaryMaskP, std::size_t n = kDefaultSmoothGradSamples,
                    std::uint64_t seed = 0);

/// Crops fed at native size, weighted by sigmoid(S_c(crop)) and pasted back.
ScoreMap random_crop_agg(const Model& model, const Tensor& image, std::size_t class_index,
                         const CropPlan& plan, std::uint64_t seed);

/// Aggregates over an explicit list of crops (no sampling).
ScoreMap crop_aggregate(const Model& model, const Tensor& image, std::size_t class_index,
                        std::span<const CropBox> boxes, CropNormalization normalization);

/// Each grid cell erased independently with probability p_erase.
ScoreMap random_patch_agg(const Model& model, const Tensor& image, std::size_t class_index,
                          double p_erase = kDefaultPatchErase, std::size_t n = 50,
                          std::uint64_t seed = 0, std::size_t grid = kDefaultPatchGrid);

/// Cell erased with probability alpha * (max over `cams` within the cell);
/// alpha in (0,1].
ScoreMap disc_patch_agg(const Model& model, const Tensor& image, std::size_t class_index,
                        std::span<const ScoreMap> cams, double alpha = kDefaultDiscAlpha,
                        std::size_t n = 50, std::uint64_t seed = 0,
                        std::size_t grid = kDefaultPatchGrid);

/// Crop kept with probability max(0, beta - max over `cams` within the crop);
/// kept crops are aggregated as in random_crop_agg. If every crop is rejected
/// the zero map is returned and a warning logged. beta in (0,1].
ScoreMap disc_crop_agg(const Model& model, const Tensor& image, std::size_t class_index,
                       std::span<const ScoreMap> cams, double beta, const CropPlan& plan,
                       std::uint64_t seed);

/// Mean of maps accumulated in double in the given order.
ScoreMap mean_of_maps(std::span<const ScoreMap> maps);

}  // namespace aslab
