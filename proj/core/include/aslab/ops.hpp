#pragma once

// Forward and backward numeric kernels of the small CAM ConvNet.
//
// All kernels are pure functions of their arguments. Every output element is
// accumulated in float32 in a fixed order (bias first, then channel-outer,
// kernel-row, kernel-column), so results are bit-reproducible and match a
// naive nested-loop reference that uses madd() in the same order.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "aslab/tensor.hpp"

namespace aslab {

/// The single multiply-accumulate primitive used by every reduction:
/// a fused multiply-add when the target has one, otherwise mul then add.
inline float madd(float a, float b, float acc) noexcept {
#if defined(__FMA__)
  return std::fma(a, b, acc);
#else
  return acc + a * b;
#endif
}

/// Gradients of one layer: one tensor per parameter (declaration order) plus
/// the gradient with respect to the layer input.
struct LayerGrads {
  std::vector<Tensor> params;
  Tensor input;
};

/// Which gradients conv2d_backward should produce.
enum class GradTargets { kAll, kInputOnly, kParamsOnly };

/// Stride-1 zero-padded 2-D cross-correlation.
/// input [Cin,H,W], kernel [Cout,Cin,F,F], bias [Cout] -> [Cout,H+2p-F+1,W+2p-F+1].
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias, int pad);

/// params = {kernel grad [Cout,Cin,F,F], bias grad [Cout]}; input = grad wrt input.
/// The input gradient is the full convolution of out_grad with the 180-degree
/// rotated, channel-transposed kernel.
LayerGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& out_grad,
                           int pad, GradTargets targets = GradTargets::kAll);

/// Input gradient only; needs just the input spatial size, not its values.
Tensor conv2d_input_grad(const Tensor& kernel, const Tensor& out_grad, int pad,
                         std::size_t in_height, std::size_t in_width);

Tensor relu_forward(const Tensor& x);
/// Passes out_grad where x > 0; the subgradient at exactly 0 is 0.
Tensor relu_backward(const Tensor& x, const Tensor& out_grad);

/// Channel-wise spatial mean of a [C,H,W] tensor.
std::vector<float> gap_forward(const Tensor& a);
/// Spreads out_grad[c] / (H*W) uniformly over channel c.
Tensor gap_backward(std::span<const float> out_grad, std::size_t height, std::size_t width);

/// y = W x + b with W shaped [out,in].
std::vector<float> dense_forward(std::span<const float> x, const Tensor& weight,
                                 const Tensor& bias);
/// params = {weight grad [out,in], bias grad [out]}; input = W^T out_grad as a rank-1 tensor.
LayerGrads dense_backward(std::span<const float> x, const Tensor& weight,
                          std::span<const float> out_grad);

struct LossResult {
  float loss = 0.0f;
  std::vector<float> logit_grad;  // softmax - onehot(target)
};

/// Numerically stable softmax cross-entropy for a single target class.
LossResult softmax_ce_loss(std::span<const float> logits, std::size_t target);

}  // namespace aslab
