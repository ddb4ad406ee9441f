#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aslab/data.hpp"
#include "aslab/model.hpp"

namespace aslab {

enum class PerturbKind { kNone, kGaussian, kBinary };

/// Per-sample input perturbation applied during training:
/// gaussian I + eps with eps ~ N(0, sigma^2); binary I * m with m ~ Bernoulli(p)
/// drawn per pixel and shared across image channels.
struct Perturb {
  PerturbKind kind = PerturbKind::kNone;
  double sigma = 0.0;
  double p = 1.0;

  static Perturb none() { return {}; }
  static Perturb gaussian(double sigma) { return {PerturbKind::kGaussian, sigma, 1.0}; }
  static Perturb binary(double p) { return {PerturbKind::kBinary, 0.0, p}; }
};

std::string to_string(const Perturb& p);
/// Parses "none", "gaussian:<sigma>" or "binary:<p>".
Perturb parse_perturb(const std::string& text);

/// Applies `p` to `image` using a generator seeded with `seed`.
Tensor perturb_image(const Tensor& image, const Perturb& p, std::uint64_t seed);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  Perturb perturb;
  bool standard_augments = false;  // random horizontal flip
};

/// Throws ConfigError on sigma < 0, p outside (0,1], zero batch size or a
/// non-positive learning rate.
void validate(const TrainConfig& cfg);

struct EpochStats {
  double mean_loss = 0.0;
  double accuracy = 0.0;  // on the (perturbed) training inputs seen this epoch
};

struct TrainStats {
  std::vector<EpochStats> epochs;
};

struct StepResult {
  double loss = 0.0;         // batch mean
  std::size_t correct = 0;   // argmax hits before the update
};

/// One SGD-with-momentum step on a batch. Per-sample gradients are summed in
/// batch order before averaging.
StepResult sgd_step(Model& model, std::vector<Tensor>& velocity, std::span<const Tensor> images,
                std::span<const std::size_t> targets, const TrainConfig& cfg);

/// Trains `model` in place on the digit labels of `data`. Random streams for
/// shuffling, flips and perturbations are derived from cfg.seed independently,
/// so a no-op perturbation (sigma = 0 or p = 1) leaves every other draw unchanged.
/// Throws NumericError if the loss becomes non-finite.
TrainStats train(Model& model, std::span<const SegSample> data, const TrainConfig& cfg);

/// Fraction of samples whose argmax logit equals the digit label.
double accuracy(const Model& model, std::span<const SegSample> data);

/// Seed used for Model::build under a training seed.
std::uint64_t init_seed(std::uint64_t seed);

}  // namespace aslab
