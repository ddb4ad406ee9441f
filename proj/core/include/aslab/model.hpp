#pragma once

// Declarative CAM ConvNet: a stack of same-padded convolutions and ReLUs,
// one global average pooling layer and one dense classifier.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "aslab/tensor.hpp"

namespace aslab {

struct Conv2DSpec {
  std::size_t f = 3;
  std::size_t cin = 1;
  std::size_t cout = 16;
  int pad = 1;
};
struct ReluSpec {};
struct GapSpec {};
struct DenseSpec {
  std::size_t cin = 16;
  std::size_t cout = 10;
};

using LayerSpec = std::variant<Conv2DSpec, ReluSpec, GapSpec, DenseSpec>;

struct InputShape {
  std::size_t channels = 1;
  std::size_t height = 64;
  std::size_t width = 64;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  InputShape input;
  std::size_t num_classes = 10;
};

/// Throws ConfigError describing the first violated rule: conv/relu layers
/// only before the GAP, exactly one GAP followed by exactly one Dense, channel
/// counts chaining, and the Dense output equal to num_classes.
void validate(const NetworkSpec& spec);

/// `depth` conv+ReLU blocks of `channels` FxF same-padded kernels, GAP, Dense.
/// F must be odd.
NetworkSpec mnist_spec(std::size_t f, std::size_t side = 64, std::size_t channels = 16,
                       std::size_t depth = 5, std::size_t num_classes = 10);

/// Shapes of every parameter tensor in declaration order
/// (conv: kernel then bias; dense: weight then bias).
std::vector<Shape> parameter_shapes(const NetworkSpec& spec);
std::size_t parameter_count(const NetworkSpec& spec);
/// Stable parameter names ("conv0.kernel", "dense.bias", ...).
std::vector<std::string> parameter_names(const NetworkSpec& spec);

/// Cached intermediate values of one forward pass.
struct ForwardTrace {
  std::vector<Tensor> layer_inputs;  // input of each pre-GAP layer
  Tensor activation;                 // A: the map fed to GAP, [k,H,W]
  std::vector<float> pooled;         // GAP(A)
  std::vector<float> logits;         // S = W GAP(A) + b
};

class Model {
 public:
  /// Parameters zero-initialised.
  explicit Model(NetworkSpec spec);

  /// Kaiming-style uniform initialisation from `seed`: conv kernels in
  /// +-sqrt(6/fan_in), dense weights in +-sqrt(3/fan_in), biases zero.
  static Model build(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  /// Replaces every parameter; shapes must match exactly.
  void set_params(std::vector<Tensor> params);

  std::size_t num_classes() const noexcept { return spec_.num_classes; }
  /// Channel count k of the activation map A.
  std::size_t feature_channels() const;
  const Tensor& dense_weight() const { return params_[params_.size() - 2]; }
  const Tensor& dense_bias() const { return params_.back(); }
  /// Row c of the dense weight, i.e. w_c.
  std::span<const float> class_weights(std::size_t class_index) const;

  /// Forward pass on an image of the configured channel count and any
  /// spatial size (the GAP makes the classifier size-agnostic).
  ForwardTrace forward(const Tensor& image) const;

  /// Logits for an image of exactly the configured input shape.
  std::vector<float> classify(const Tensor& image) const;

  /// Gradient of sum_j pooled_grad[j] * GAP(A)[j] with respect to the input image.
  Tensor input_gradient(const ForwardTrace& trace, std::span<const float> pooled_grad) const;

  /// dS_c/dI for one logit.
  Tensor logit_input_gradient(const ForwardTrace& trace, std::size_t class_index) const;

  /// Gradients of sum_c logit_grad[c] * S_c with respect to every parameter,
  /// in declaration order.
  std::vector<Tensor> parameter_gradients(const ForwardTrace& trace,
                                          std::span<const float> logit_grad) const;

 private:
  void check_image(const Tensor& image, bool exact) const;

  NetworkSpec spec_;
  std::vector<Tensor> params_;
  std::vector<std::size_t> param_offset_;  // per layer: index of its first parameter
  std::size_t gap_index_ = 0;
};

}  // namespace aslab
