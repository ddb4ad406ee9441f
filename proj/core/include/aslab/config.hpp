#pragma once

// Experiment manifests: INI files with one section per concern.
//
//   [data]     mnist_dir, side, train_count, test_count
//   [network]  kernel_size, channels, depth
//   [train]    epochs, batch_size, learning_rate, momentum, seed, perturb, flip
//   [aggregate] method, seed, sigma, p, n_samples, n_crops, area_min, area_max,
//              aspect_min, aspect_max, normalization, p_erase, grid, alpha, beta
//   [eval]     tau_cam, tau_grid, resolve, smooth_kernel, smooth_sigma,
//              superpixel_k, superpixel_sigma, superpixel_min_size
//   [contribution_window] kernel_sizes, checkpoint_dir
//   [sensitivity] axis, values
//
// Lists are comma separated. Unknown sections or keys are errors.

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "aslab/experiment.hpp"

namespace aslab {

struct DataConfig {
  std::filesystem::path mnist_dir = "data/mnist";
  std::size_t side = 64;
  std::size_t train_count = 10000;  // 0: all
  std::size_t test_count = 2000;
};

struct NetworkConfig {
  std::size_t kernel_size = 5;
  std::size_t channels = 16;
  std::size_t depth = 5;
};

struct ExperimentConfig {
  DataConfig data;
  NetworkConfig network;
  TrainConfig train;
  MethodConfig method;
  EvalConfig eval;
  std::vector<std::size_t> kernel_sizes{1, 3, 5, 7};
  std::filesystem::path checkpoint_dir;
  std::string sensitivity_axis = "sigma";
  std::vector<double> sensitivity_values;

  /// "section.key" of every key set from a file or an override.
  std::set<std::string> provided;
  bool has(const std::string& key) const { return provided.count(key) != 0; }
};

/// Throws ConfigError naming the offending key path.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Applies one "section.key=value" assignment.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Sets `key` ("section.key") to `value`.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Every accepted "section.key", sorted.
std::vector<std::string> config_keys();

}  // namespace aslab
