#include "aslab/model.hpp"

#include <cmath>
#include <string>

#include "aslab/error.hpp"
#include "aslab/ops.hpp"
#include "aslab/rng.hpp"

namespace aslab {
namespace {

std::string layer_label(std::size_t i) { return "layer " + std::to_string(i); }

}  // namespace

void validate(const NetworkSpec& spec) {
  const auto& layers = spec.layers;
  if (layers.size() < 2) throw ConfigError("network: needs at least GAP and Dense layers");
  if (spec.input.channels == 0 || spec.input.height == 0 || spec.input.width == 0) {
    throw ConfigError("network: input shape must be positive");
  }
  std::size_t channels = spec.input.channels;
  std::size_t h = spec.input.height, w = spec.input.width;
  std::size_t gaps = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (std::holds_alternative<Conv2DSpec>(l)) {
      const auto& c = std::get<Conv2DSpec>(l);
      if (gaps) throw ConfigError("network: " + layer_label(i) + ": Conv2D after GAP");
      if (c.f == 0 || c.cout == 0 || c.pad < 0) {
        throw ConfigError("network: " + layer_label(i) + ": invalid Conv2D parameters");
      }
      if (c.cin != channels) {
        throw ConfigError("network: " + layer_label(i) + ": Conv2D expects " +
                          std::to_string(c.cin) + " input channels, previous layer gives " +
                          std::to_string(channels));
      }
      const std::size_t p2 = 2 * static_cast<std::size_t>(c.pad);
      if (c.f > h + p2 || c.f > w + p2) {
        throw ConfigError("network: " + layer_label(i) + ": kernel larger than padded input");
      }
      h = h + p2 - c.f + 1;
      w = w + p2 - c.f + 1;
      channels = c.cout;
    } else if (std::holds_alternative<ReluSpec>(l)) {
      if (gaps) throw ConfigError("network: " + layer_label(i) + ": ReLU after GAP");
    } else if (std::holds_alternative<GapSpec>(l)) {
      ++gaps;
      if (i + 2 != layers.size() || !std::holds_alternative<DenseSpec>(layers.back())) {
        throw ConfigError("network: GAP must be followed by exactly one Dense layer");
      }
    } else {
      if (!gaps) throw ConfigError("network: Dense layer must follow the GAP");
      const auto& d = std::get<DenseSpec>(l);
      if (d.cin != channels) {
        throw ConfigError("network: Dense expects " + std::to_string(d.cin) +
                          " inputs, GAP gives " + std::to_string(channels));
      }
      if (d.cout != spec.num_classes) {
        throw ConfigError("network: Dense produces " + std::to_string(d.cout) +
                          " outputs, num_classes is " + std::to_string(spec.num_classes));
      }
    }
  }
  if (gaps != 1) throw ConfigError("network: exactly one GAP layer required");
}

NetworkSpec mnist_spec(std::size_t f, std::size_t side, std::size_t channels, std::size_t depth,
                       std::size_t num_classes) {
  if (f % 2 == 0) throw ConfigError("network: kernel size must be odd, got " + std::to_string(f));
  NetworkSpec s;
  s.input = {1, side, side};
  s.num_classes = num_classes;
  std::size_t cin = 1;
  for (std::size_t i = 0; i < depth; ++i) {
    s.layers.push_back(Conv2DSpec{f, cin, channels, static_cast<int>((f - 1) / 2)});
    s.layers.push_back(ReluSpec{});
    cin = channels;
  }
  s.layers.push_back(GapSpec{});
  s.layers.push_back(DenseSpec{cin, num_classes});
  return s;
}

std::vector<Shape> parameter_shapes(const NetworkSpec& spec) {
  std::vector<Shape> shapes;
  for (const LayerSpec& l : spec.layers) {
    if (const auto* c = std::get_if<Conv2DSpec>(&l)) {
      shapes.push_back({c->cout, c->cin, c->f, c->f});
      shapes.push_back({c->cout});
    } else if (const auto* d = std::get_if<DenseSpec>(&l)) {
      shapes.push_back({d->cout, d->cin});
      shapes.push_back({d->cout});
    }
  }
  return shapes;
}

std::size_t parameter_count(const NetworkSpec& spec) {
  std::size_t n = 0;
  for (const Shape& s : parameter_shapes(spec)) n += shape_volume(s);
  return n;
}

std::vector<std::string> parameter_names(const NetworkSpec& spec) {
  std::vector<std::string> names;
  std::size_t conv = 0;
  for (const LayerSpec& l : spec.layers) {
    if (std::holds_alternative<Conv2DSpec>(l)) {
      const std::string p = "conv" + std::to_string(conv++);
      names.push_back(p + ".kernel");
      names.push_back(p + ".bias");
    } else if (std::holds_alternative<DenseSpec>(l)) {
      names.push_back("dense.weight");
      names.push_back("dense.bias");
    }
  }
  return names;
}

Model::Model(NetworkSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  for (const Shape& s : parameter_shapes(spec_)) params_.emplace_back(s);
  std::size_t p = 0;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    param_offset_.push_back(p);
    const LayerSpec& l = spec_.layers[i];
    if (std::holds_alternative<Conv2DSpec>(l) || std::holds_alternative<DenseSpec>(l)) p += 2;
    if (std::holds_alternative<GapSpec>(l)) gap_index_ = i;
  }
}

Model Model::build(const NetworkSpec& spec, std::uint64_t seed) {
  Model m(spec);
  Rng rng(seed);
  std::size_t p = 0;
  for (const LayerSpec& l : m.spec_.layers) {
    double bound = 0.0;
    if (const auto* c = std::get_if<Conv2DSpec>(&l)) {
      bound = std::sqrt(6.0 / static_cast<double>(c->cin * c->f * c->f));
    } else if (const auto* d = std::get_if<DenseSpec>(&l)) {
      bound = std::sqrt(3.0 / static_cast<double>(d->cin));
    } else {
      continue;
    }
    for (float& v : m.params_[p].values()) v = static_cast<float>(rng.uniform(-bound, bound));
    p += 2;  // biases stay zero
  }
  return m;
}

void Model::set_params(std::vector<Tensor> params) {
  if (params.size() != params_.size()) {
    throw ShapeError("model: expected " + std::to_string(params_.size()) +
                     " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != params_[i].shape()) {
      throw ShapeError("model: parameter " + std::to_string(i) + " has shape " +
                       shape_to_string(params[i].shape()) + ", expected " +
                       shape_to_string(params_[i].shape()));
    }
  }
  params_ = std::move(params);
}

std::size_t Model::feature_channels() const { return dense_weight().dim(1); }

std::span<const float> Model::class_weights(std::size_t class_index) const {
  if (class_index >= spec_.num_classes) {
    throw ConfigError("class index " + std::to_string(class_index) + " out of range for " +
                      std::to_string(spec_.num_classes) + " classes");
  }
  const std::size_t k = feature_channels();
  return {dense_weight().data() + class_index * k, k};
}

void Model::check_image(const Tensor& image, bool exact) const {
  const InputShape& in = spec_.input;
  const bool ok = image.rank() == 3 && image.dim(0) == in.channels &&
                  (!exact || (image.dim(1) == in.height && image.dim(2) == in.width)) &&
                  image.size() > 0;
  if (!ok) {
    throw ShapeError("model: image shape " + shape_to_string(image.shape()) +
                     " does not match input [" + std::to_string(in.channels) + "," +
                     (exact ? std::to_string(in.height) + "," + std::to_string(in.width)
                            : std::string("H,W")) +
                     "]");
  }
}

ForwardTrace Model::forward(const Tensor& image) const {
  check_image(image, false);
  ForwardTrace t;
  Tensor x = image;
  for (std::size_t i = 0; i < gap_index_; ++i) {
    t.layer_inputs.push_back(x);
    const LayerSpec& l = spec_.layers[i];
    if (const auto* c = std::get_if<Conv2DSpec>(&l)) {
      const std::size_t p = param_offset_[i];
      x = conv2d_forward(x, params_[p], params_[p + 1], c->pad);
    } else {
      x = relu_forward(x);
    }
  }
  t.pooled = gap_forward(x);
  t.activation = std::move(x);
  t.logits = dense_forward(t.pooled, dense_weight(), dense_bias());
  return t;
}

std::vector<float> Model::classify(const Tensor& image) const {
  check_image(image, true);
  return forward(image).logits;
}

Tensor Model::input_gradient(const ForwardTrace& trace, std::span<const float> pooled_grad) const {
  if (pooled_grad.size() != trace.activation.dim(0)) {
    throw ShapeError("model: pooled gradient has " + std::to_string(pooled_grad.size()) +
                     " entries, activation has " + std::to_string(trace.activation.dim(0)) +
                     " channels");
  }
  Tensor g = gap_backward(pooled_grad, trace.activation.dim(1), trace.activation.dim(2));
  for (std::size_t i = gap_index_; i-- > 0;) {
    const Tensor& in = trace.layer_inputs[i];
    const LayerSpec& l = spec_.layers[i];
    if (const auto* c = std::get_if<Conv2DSpec>(&l)) {
      g = conv2d_input_grad(params_[param_offset_[i]], g, c->pad, in.dim(1), in.dim(2));
    } else {
      g = relu_backward(in, g);
    }
  }
  return g;
}

Tensor Model::logit_input_gradient(const ForwardTrace& trace, std::size_t class_index) const {
  return input_gradient(trace, class_weights(class_index));
}

std::vector<Tensor> Model::parameter_gradients(const ForwardTrace& trace,
                                               std::span<const float> logit_grad) const {
  if (logit_grad.size() != spec_.num_classes) {
    throw ShapeError("model: logit gradient has " + std::to_string(logit_grad.size()) +
                     " entries, expected " + std::to_string(spec_.num_classes));
  }
  std::vector<Tensor> grads(params_.size());
  LayerGrads dense = dense_backward(trace.pooled, dense_weight(), logit_grad);
  grads[params_.size() - 2] = std::move(dense.params[0]);
  grads[params_.size() - 1] = std::move(dense.params[1]);
  Tensor g = gap_backward(dense.input.values(), trace.activation.dim(1), trace.activation.dim(2));
  for (std::size_t i = gap_index_; i-- > 0;) {
    const Tensor& in = trace.layer_inputs[i];
    const LayerSpec& l = spec_.layers[i];
    if (const auto* c = std::get_if<Conv2DSpec>(&l)) {
      const std::size_t p = param_offset_[i];
      // The gradient wrt the image itself is never needed.
      const GradTargets targets = i == 0 ? GradTargets::kParamsOnly : GradTargets::kAll;
      LayerGrads lg = conv2d_backward(in, params_[p], g, c->pad, targets);
      grads[p] = std::move(lg.params[0]);
      grads[p + 1] = std::move(lg.params[1]);
      g = std::move(lg.input);
    } else {
      g = relu_backward(in, g);
    }
  }
  return grads;
}

}  // namespace aslab
