#pragma once

// Background resolves: per-class score maps -> label mask.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aslab/attribution.hpp"
#include "aslab/data.hpp"
#include "aslab/felzenszwalb.hpp"

namespace aslab {

inline constexpr float kDefaultSuperpixelTau = 0.3f;
inline constexpr std::size_t kDefaultSmoothKernel = 13;
inline constexpr double kDefaultSmoothSigma = 5.0;

/// Per-pixel foreground score and candidate label; every resolve reduces to
/// this form before thresholding: label if score >= tau, else background.
struct ResolvedScores {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> score;
  std::vector<std::uint8_t> label;
};

LabelMask apply_threshold(const ResolvedScores& r, float tau);

/// max over classes and its argmax (lowest class id on ties).
ResolvedScores prepare_basic(std::span<const ScoreMap> scores);
LabelMask resolve_basic(std::span<const ScoreMap> scores, float tau);

/// Normalized 1-D Gaussian taps of odd length `size`.
std::vector<float> gaussian_kernel_1d(std::size_t size, double sigma);
/// Separable Gaussian smoothing with mirror padding that repeats the edge
/// pixel (abc|cba). The kernel shrinks to the largest odd size that fits the
/// map, with a warning.
ScoreMap smooth_map(const ScoreMap& map, std::size_t kernel_size = kDefaultSmoothKernel,
                    double sigma = kDefaultSmoothSigma);
ResolvedScores prepare_smooth(std::span<const ScoreMap> scores,
                              std::size_t kernel_size = kDefaultSmoothKernel,
                              double sigma = kDefaultSmoothSigma);
LabelMask resolve_smooth(std::span<const ScoreMap> scores, float tau,
                         std::size_t kernel_size = kDefaultSmoothKernel,
                         double sigma = kDefaultSmoothSigma);

/// Per segment: score = mean over its pixels of the max-over-classes score,
/// label = class with the highest per-segment mean (lowest id on ties).
ResolvedScores prepare_superpixel(std::span<const ScoreMap> scores, const SuperpixelMap& sp);
LabelMask resolve_superpixel(std::span<const ScoreMap> scores, const SuperpixelMap& sp,
                             float tau = kDefaultSuperpixelTau);
LabelMask resolve_superpixel(std::span<const ScoreMap> scores, const Tensor& image,
                             float tau = kDefaultSuperpixelTau,
                             const FelzenszwalbParams& params = {});

}  // namespace aslab
