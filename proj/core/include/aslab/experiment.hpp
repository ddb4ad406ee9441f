#pragma once

// Dataset-level evaluation of attribution methods and the two sweep
// experiments: kernel size (contribution window) and aggregation sensitivity.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aslab/aggregation.hpp"
#include "aslab/felzenszwalb.hpp"
#include "aslab/model.hpp"
#include "aslab/sweep.hpp"
#include "aslab/train.hpp"

namespace aslab {

enum class MapMethod {
  kCam,
  kSaliency,
  kSmoothGrad,
  kBinaryMask,
  kRandomCrop,
  kRandomPatch,
  kDiscPatch,
  kDiscCrop,
};

std::string to_string(MapMethod m);
/// cam, saliency, smoothgrad, binarymask, random_crop, random_patch, disc_patch, disc_crop.
MapMethod parse_map_method(const std::string& name);

struct MethodConfig {
  MapMethod method = MapMethod::kSaliency;
  double sigma = kDefaultSmoothGradSigma;
  double p = kDefaultBinaryMaskP;
  std::size_t n_samples = kDefaultSmoothGradSamples;
  CropPlan crop;
  double p_erase = kDefaultPatchErase;
  std::size_t grid = kDefaultPatchGrid;
  double alpha = kDefaultDiscAlpha;
  double beta = kDefaultDiscBeta;
  std::uint64_t seed = 0;
};

/// Raw map of `class_index` for one image. Randomized methods draw from
/// split_seed(cfg.seed, stream). The disc variants need `cams`.
ScoreMap method_map_raw(const Model& model, const Tensor& image, std::size_t class_index,
                        const MethodConfig& cfg, std::uint64_t stream,
                        std::span<const ScoreMap> cams = {});

enum class ResolveKind { kBasic, kSmooth, kSuperpixel };

std::string to_string(ResolveKind r);
ResolveKind parse_resolve_kind(const std::string& name);

struct EvalConfig {
  float tau_cam = kDefaultTauCam;
  std::vector<float> tau_grid = default_tau_grid();
  ResolveKind resolve = ResolveKind::kBasic;
  std::size_t smooth_kernel = kDefaultSmoothKernel;
  double smooth_sigma = kDefaultSmoothSigma;
  FelzenszwalbParams superpixel;
};

/// The per-pixel scores of eval.resolve; the superpixel resolve segments `image`.
ResolvedScores prepare_resolve(std::span<const ScoreMap> maps, const EvalConfig& eval,
                               const Tensor& image);

/// Label ids 0..10: background plus digit+1.
inline constexpr std::size_t kMnistSegClasses = 11;

/// For every sample: the normalized map of its ground-truth digit (relabelled
/// to the mask id), the resolve's per-pixel scores, and the DR/NDR partition
/// from the CAM at eval.tau_cam. Sample i uses stream i.
std::vector<SweepItem> build_sweep_items(const Model& model, std::span<const SegSample> data,
                                         const MethodConfig& method, const EvalConfig& eval);

ThresholdSweep evaluate_method(const Model& model, std::span<const SegSample> data,
                               const MethodConfig& method, const EvalConfig& eval);

/// One evaluated point of a sweep. Failed points keep their axis value, carry
/// the error in `status` and print metrics as nan.
struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::string method;
  std::string status = "ok";
  MetricsReport report;
  double train_accuracy = -1.0;  // negative: not applicable
  double test_accuracy = -1.0;

  bool ok() const { return status == "ok"; }
};

struct SweepResult {
  std::string axis;
  std::vector<SweepRow> rows;

  static std::string csv_header();
  std::string csv() const;
  /// First row with the given value and method; nullptr if absent.
  const SweepRow* find(double value, const std::string& method) const;
};

struct ContributionWindowConfig {
  std::vector<std::size_t> kernel_sizes{1, 3, 5, 7};
  std::size_t channels = 16;
  std::size_t depth = 5;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path checkpoint_dir;  // empty: do not save models
};

/// Trains one network per kernel size on `train_set`, then evaluates CAM and
/// saliency on `test_set`, each at its own best tau. A kernel size whose
/// training diverges yields failed rows and the sweep moves on. Trained models
/// are appended to `models` when it is non-null (diverged ones included).
SweepResult cmd_contribution_window(const ContributionWindowConfig& cfg,
                                    std::span<const SegSample> train_set,
                                    std::span<const SegSample> test_set,
                                    std::vector<Model>* models = nullptr);

struct SensitivityConfig {
  std::string axis;  // sigma | p | n_samples | n_crops | crop_scale
  std::vector<double> values;
  MethodConfig base;
  EvalConfig eval;
};

/// Aggregation method an axis varies: sigma -> smoothgrad, p -> binarymask,
/// n_samples -> base method if it takes a sample count (else smoothgrad),
/// n_crops and crop_scale -> random_crop. crop_scale sets the smallest crop
/// area fraction.
MethodConfig sensitivity_point(const SensitivityConfig& cfg, double value);

/// Values must be nonempty and strictly increasing.
SweepResult cmd_sensitivity(const Model& model, std::span<const SegSample> test_set,
                            const SensitivityConfig& cfg);

}  // namespace aslab
