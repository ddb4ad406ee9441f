#include "aslab/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aslab/error.hpp"

#if defined(__AVX2__) || defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace aslab {
namespace {

// Zero-padded copy of a [C,H,W] tensor. Rows carry enough trailing slack that
// a full register strip may be read past the last valid column.
struct PaddedPlanes {
  std::vector<float> buf;
  std::size_t channels = 0;
  std::size_t height = 0;  // padded height
  std::size_t stride = 0;  // floats per padded row
};

constexpr std::size_t kMaxStrip = 128;

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

PaddedPlanes pad_planes(const float* src, std::size_t c, std::size_t h, std::size_t w,
                        std::size_t pad) {
  PaddedPlanes p;
  p.channels = c;
  p.height = h + 2 * pad;
  p.stride = round_up(w + 2 * pad + kMaxStrip, 16);
  p.buf.assign(c * p.height * p.stride, 0.0f);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      const float* s = src + (ch * h + y) * w;
      float* d = p.buf.data() + (ch * p.height + y + pad) * p.stride + pad;
      std::copy(s, s + w, d);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// SIMD layer. vmadd must round exactly like the scalar madd() above.
#if defined(__AVX512F__) && defined(__FMA__)
using vfloat = __m512;
constexpr std::size_t kLanes = 16;
inline vfloat vload(const float* p) { return _mm512_loadu_ps(p); }
inline vfloat vbroadcast(float a) { return _mm512_set1_ps(a); }
inline vfloat vmadd(vfloat a, vfloat b, vfloat c) { return _mm512_fmadd_ps(a, b, c); }
inline void vstore(float* p, vfloat v) { _mm512_storeu_ps(p, v); }
constexpr std::size_t kChannelBlock = 4;
#elif defined(__AVX2__) && defined(__FMA__)
using vfloat = __m256;
constexpr std::size_t kLanes = 8;
inline vfloat vload(const float* p) { return _mm256_loadu_ps(p); }
inline vfloat vbroadcast(float a) { return _mm256_set1_ps(a); }
inline vfloat vmadd(vfloat a, vfloat b, vfloat c) { return _mm256_fmadd_ps(a, b, c); }
inline void vstore(float* p, vfloat v) { _mm256_storeu_ps(p, v); }
constexpr std::size_t kChannelBlock = 2;
#else
struct vfloat {
  float v;
};
constexpr std::size_t kLanes = 1;
inline vfloat vload(const float* p) { return {*p}; }
inline vfloat vbroadcast(float a) { return {a}; }
inline vfloat vmadd(vfloat a, vfloat b, vfloat c) { return {madd(a.v, b.v, c.v)}; }
inline void vstore(float* p, vfloat v) { *p = v.v; }
constexpr std::size_t kChannelBlock = 2;
#endif

constexpr std::size_t kStripVectors = kLanes >= 8 ? 4 : 16;

// One strip of NV*kLanes output columns for NC output channels. Per output
// element the order is bias, then (ci, ky, kx) ascending.
template <std::size_t NV, std::size_t NC>
void conv_strip(const PaddedPlanes& in, const float* kernel, std::size_t kstride,
                const float* bias, std::size_t cin, std::size_t f, std::size_t y,
                std::size_t x0, float* out, std::size_t plane, std::size_t count) {
  vfloat acc[NC][NV];
#pragma GCC unroll 16
  for (std::size_t c = 0; c < NC; ++c) {
    const vfloat b = vbroadcast(bias[c]);
#pragma GCC unroll 16
    for (std::size_t v = 0; v < NV; ++v) acc[c][v] = b;
  }
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t ky = 0; ky < f; ++ky) {
      const float* row = in.buf.data() + (ci * in.height + y + ky) * in.stride + x0;
      const float* w = kernel + (ci * f + ky) * f;
      for (std::size_t kx = 0; kx < f; ++kx) {
        vfloat r[NV];
#pragma GCC unroll 16
        for (std::size_t v = 0; v < NV; ++v) r[v] = vload(row + kx + v * kLanes);
#pragma GCC unroll 16
        for (std::size_t c = 0; c < NC; ++c) {
          const vfloat a = vbroadcast(w[c * kstride + kx]);
#pragma GCC unroll 16
          for (std::size_t v = 0; v < NV; ++v) acc[c][v] = vmadd(a, r[v], acc[c][v]);
        }
      }
    }
  }
  alignas(64) float tmp[NV * kLanes];
  for (std::size_t c = 0; c < NC; ++c) {
    if (count == NV * kLanes) {
      for (std::size_t v = 0; v < NV; ++v) vstore(out + c * plane + v * kLanes, acc[c][v]);
    } else {
      for (std::size_t v = 0; v < NV; ++v) vstore(tmp + v * kLanes, acc[c][v]);
      std::copy(tmp, tmp + count, out + c * plane);
    }
  }
}

template <std::size_t NV>
void conv_planes(const PaddedPlanes& in, const float* kernel, const float* bias,
                 std::size_t cout, std::size_t cin, std::size_t f, std::size_t ho,
                 std::size_t wo, float* out) {
  constexpr std::size_t strip = NV * kLanes;
  const std::size_t kstride = cin * f * f;
  const std::size_t plane = ho * wo;
  std::size_t co = 0;
  for (; co + kChannelBlock <= cout; co += kChannelBlock) {
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t x0 = 0; x0 < wo; x0 += strip)
        conv_strip<NV, kChannelBlock>(in, kernel + co * kstride, kstride, bias + co, cin, f,
                                      y, x0, out + co * plane + y * wo + x0, plane,
                                      std::min(strip, wo - x0));
  }
  for (; co < cout; ++co) {
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t x0 = 0; x0 < wo; x0 += strip)
        conv_strip<NV, 1>(in, kernel + co * kstride, kstride, bias + co, cin, f, y, x0,
                          out + co * plane + y * wo + x0, plane, std::min(strip, wo - x0));
  }
}

void run_conv(const PaddedPlanes& in, const float* kernel, const float* bias, std::size_t cout,
              std::size_t cin, std::size_t f, std::size_t ho, std::size_t wo, float* out) {
  const std::size_t vectors = (wo + kLanes - 1) / kLanes;
  if (vectors <= 1) {
    conv_planes<1>(in, kernel, bias, cout, cin, f, ho, wo, out);
  } else if (vectors <= 2) {
    conv_planes<2>(in, kernel, bias, cout, cin, f, ho, wo, out);
  } else if (vectors <= 3 || kStripVectors < 4) {
    conv_planes<(kStripVectors < 3 ? kStripVectors : 3)>(in, kernel, bias, cout, cin, f, ho, wo,
                                                         out);
  } else {
    conv_planes<kStripVectors>(in, kernel, bias, cout, cin, f, ho, wo, out);
  }
}

// Horizontal sum of one accumulator in a fixed pairwise order.
inline float reduce_vector(vfloat v) {
  alignas(64) float lanes[kLanes];
  vstore(lanes, v);
  for (std::size_t width = kLanes / 2; width >= 1; width /= 2)
    for (std::size_t i = 0; i < width; ++i) lanes[i] += lanes[i + width];
  return lanes[0];
}

// Kernel gradient for NC output channels and one (ci, ky) row of taps:
// dK[co][ci][ky][kx] = sum_{y,x} g[co][y][x] * P[ci][y+ky][x+kx].
// Lane l accumulates columns x = l (mod kLanes) in (y, x) order.
template <std::size_t F, std::size_t NC>
void kernel_grad_row(const float* g, std::size_t gstride, const PaddedPlanes& in,
                     std::size_t ci, std::size_t ky, std::size_t ho, std::size_t plane_g,
                     float* dk, std::size_t dk_cstride) {
  vfloat acc[NC][F];
  for (std::size_t c = 0; c < NC; ++c)
    for (std::size_t kx = 0; kx < F; ++kx) acc[c][kx] = vbroadcast(0.0f);
  for (std::size_t y = 0; y < ho; ++y) {
    const float* irow = in.buf.data() + (ci * in.height + y + ky) * in.stride;
    for (std::size_t x0 = 0; x0 < gstride; x0 += kLanes) {
      vfloat gv[NC];
#pragma GCC unroll 8
      for (std::size_t c = 0; c < NC; ++c) gv[c] = vload(g + c * plane_g + y * gstride + x0);
#pragma GCC unroll 16
      for (std::size_t kx = 0; kx < F; ++kx) {
        const vfloat iv = vload(irow + x0 + kx);
#pragma GCC unroll 8
        for (std::size_t c = 0; c < NC; ++c) acc[c][kx] = vmadd(gv[c], iv, acc[c][kx]);
      }
    }
  }
  for (std::size_t c = 0; c < NC; ++c)
    for (std::size_t kx = 0; kx < F; ++kx) dk[c * dk_cstride + kx] = reduce_vector(acc[c][kx]);
}

template <std::size_t F>
void kernel_grad(const std::vector<float>& g, std::size_t gstride, const PaddedPlanes& in,
                 std::size_t cout, std::size_t cin, std::size_t ho, float* dk) {
  const std::size_t plane_g = ho * gstride;
  const std::size_t dk_cstride = cin * F * F;
  std::size_t co = 0;
  for (; co + 2 <= cout; co += 2)
    for (std::size_t ci = 0; ci < cin; ++ci)
      for (std::size_t ky = 0; ky < F; ++ky)
        kernel_grad_row<F, 2>(g.data() + co * plane_g, gstride, in, ci, ky, ho, plane_g,
                              dk + co * dk_cstride + (ci * F + ky) * F, dk_cstride);
  for (; co < cout; ++co)
    for (std::size_t ci = 0; ci < cin; ++ci)
      for (std::size_t ky = 0; ky < F; ++ky)
        kernel_grad_row<F, 1>(g.data() + co * plane_g, gstride, in, ci, ky, ho, plane_g,
                              dk + co * dk_cstride + (ci * F + ky) * F, dk_cstride);
}

// Fallback for kernels wider than the unrolled variants: one tap at a time.
void kernel_grad_generic(const std::vector<float>& g, std::size_t gstride,
                         const PaddedPlanes& in, std::size_t cout, std::size_t cin,
                         std::size_t f, std::size_t ho, float* dk) {
  const std::size_t plane_g = ho * gstride;
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t ci = 0; ci < cin; ++ci)
      for (std::size_t ky = 0; ky < f; ++ky)
        for (std::size_t kx = 0; kx < f; ++kx) {
          vfloat acc = vbroadcast(0.0f);
          for (std::size_t y = 0; y < ho; ++y) {
            const float* irow = in.buf.data() + (ci * in.height + y + ky) * in.stride + kx;
            const float* grow = g.data() + co * plane_g + y * gstride;
            for (std::size_t x0 = 0; x0 < gstride; x0 += kLanes)
              acc = vmadd(vload(grow + x0), vload(irow + x0), acc);
          }
          dk[((co * cin + ci) * f + ky) * f + kx] = reduce_vector(acc);
        }
}

struct ConvDims {
  std::size_t cin, h, w, cout, f, ho, wo;
};

ConvDims check_conv(const Tensor& input, const Tensor& kernel, int pad) {
  if (pad < 0) throw ShapeError("conv2d: negative padding " + std::to_string(pad));
  if (input.rank() != 3) {
    throw ShapeError("conv2d: input must be [Cin,H,W], got " + shape_to_string(input.shape()));
  }
  if (kernel.rank() != 4 || kernel.dim(2) != kernel.dim(3)) {
    throw ShapeError("conv2d: kernel must be [Cout,Cin,F,F], got " +
                     shape_to_string(kernel.shape()));
  }
  ConvDims d{input.dim(0), input.dim(1), input.dim(2), kernel.dim(0), kernel.dim(2), 0, 0};
  if (kernel.dim(1) != d.cin) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.dim(1)) +
                     " input channels, input has " + std::to_string(d.cin));
  }
  const std::size_t p2 = 2 * static_cast<std::size_t>(pad);
  if (d.f == 0 || d.f > d.h + p2 || d.f > d.w + p2) {
    throw ShapeError("conv2d: kernel size " + std::to_string(d.f) + " exceeds padded input " +
                     std::to_string(d.h + p2) + "x" + std::to_string(d.w + p2));
  }
  d.ho = d.h + p2 - d.f + 1;
  d.wo = d.w + p2 - d.f + 1;
  return d;
}

// Rotates each FxF slice by 180 degrees and swaps the two channel axes.
std::vector<float> flipped_transposed(const Tensor& kernel) {
  const std::size_t cout = kernel.dim(0), cin = kernel.dim(1), f = kernel.dim(2);
  std::vector<float> t(kernel.size());
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t ci = 0; ci < cin; ++ci)
      for (std::size_t ky = 0; ky < f; ++ky)
        for (std::size_t kx = 0; kx < f; ++kx)
          t[((ci * cout + co) * f + (f - 1 - ky)) * f + (f - 1 - kx)] =
              kernel[((co * cin + ci) * f + ky) * f + kx];
  return t;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias, int pad) {
  const ConvDims d = check_conv(input, kernel, pad);
  if (bias.size() != d.cout) {
    throw ShapeError("conv2d: bias has " + std::to_string(bias.size()) + " entries, expected " +
                     std::to_string(d.cout));
  }
  const PaddedPlanes padded =
      pad_planes(input.data(), d.cin, d.h, d.w, static_cast<std::size_t>(pad));
  Tensor out({d.cout, d.ho, d.wo});
  run_conv(padded, kernel.data(), bias.data(), d.cout, d.cin, d.f, d.ho, d.wo, out.data());
  return out;
}

Tensor conv2d_input_grad(const Tensor& kernel, const Tensor& out_grad, int pad,
                         std::size_t in_height, std::size_t in_width) {
  if (kernel.rank() != 4 || out_grad.rank() != 3) {
    throw ShapeError("conv2d_input_grad: expected kernel [Cout,Cin,F,F] and grad [Cout,H',W']");
  }
  const std::size_t cout = kernel.dim(0), cin = kernel.dim(1), f = kernel.dim(2);
  const std::size_t p2 = 2 * static_cast<std::size_t>(pad);
  if (out_grad.dim(0) != cout || out_grad.dim(1) + f != in_height + p2 + 1 ||
      out_grad.dim(2) + f != in_width + p2 + 1) {
    throw ShapeError("conv2d_backward: out_grad shape " + shape_to_string(out_grad.shape()) +
                     " does not match the forward output of a " + std::to_string(in_height) +
                     "x" + std::to_string(in_width) + " input");
  }
  const std::vector<float> kt = flipped_transposed(kernel);
  const std::vector<float> zero_bias(cin, 0.0f);
  const std::size_t ho = out_grad.dim(1), wo = out_grad.dim(2);

  // Full correlation needs F-1-pad zeros per side; when pad > F-1 the result
  // is the interior of a pad-0 correlation instead.
  const long tpad = static_cast<long>(f) - 1 - pad;
  const std::size_t use_pad = tpad > 0 ? static_cast<std::size_t>(tpad) : 0;
  const PaddedPlanes padded = pad_planes(out_grad.data(), cout, ho, wo, use_pad);
  const std::size_t fh = ho + 2 * use_pad - f + 1, fw = wo + 2 * use_pad - f + 1;
  if (tpad >= 0) {
    Tensor in_grad({cin, in_height, in_width});
    run_conv(padded, kt.data(), zero_bias.data(), cin, cout, f, fh, fw, in_grad.data());
    return in_grad;
  }
  Tensor full({cin, fh, fw});
  run_conv(padded, kt.data(), zero_bias.data(), cin, cout, f, fh, fw, full.data());
  const std::size_t off = static_cast<std::size_t>(-tpad);
  Tensor in_grad({cin, in_height, in_width});
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t y = 0; y < in_height; ++y)
      for (std::size_t x = 0; x < in_width; ++x)
        in_grad.at(c, y, x) = full.at(c, y + off, x + off);
  return in_grad;
}

LayerGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& out_grad,
                           int pad, GradTargets targets) {
  const ConvDims d = check_conv(input, kernel, pad);
  if (out_grad.rank() != 3 || out_grad.dim(0) != d.cout || out_grad.dim(1) != d.ho ||
      out_grad.dim(2) != d.wo) {
    throw ShapeError("conv2d_backward: out_grad shape " + shape_to_string(out_grad.shape()) +
                     " does not match forward output [" + std::to_string(d.cout) + "," +
                     std::to_string(d.ho) + "," + std::to_string(d.wo) + "]");
  }
  LayerGrads grads;
  if (targets != GradTargets::kInputOnly) {
    const PaddedPlanes padded =
        pad_planes(input.data(), d.cin, d.h, d.w, static_cast<std::size_t>(pad));
    // Gradient rows zero-extended to a whole number of vectors.
    const std::size_t gstride = round_up(d.wo, kLanes);
    std::vector<float> g(d.cout * d.ho * gstride, 0.0f);
    for (std::size_t co = 0; co < d.cout; ++co)
      for (std::size_t y = 0; y < d.ho; ++y)
        std::copy_n(out_grad.data() + (co * d.ho + y) * d.wo, d.wo,
                    g.data() + (co * d.ho + y) * gstride);

    Tensor dk({d.cout, d.cin, d.f, d.f});
    Tensor db({d.cout});
    switch (d.f) {
      case 1: kernel_grad<1>(g, gstride, padded, d.cout, d.cin, d.ho, dk.data()); break;
      case 2: kernel_grad<2>(g, gstride, padded, d.cout, d.cin, d.ho, dk.data()); break;
      case 3: kernel_grad<3>(g, gstride, padded, d.cout, d.cin, d.ho, dk.data()); break;
      case 4: kernel_grad<4>(g, gstride, padded, d.cout, d.cin, d.ho, dk.data()); break;
      case 5: kernel_grad<5>(g, gstride, padded, d.cout, d.cin, d.ho, dk.data()); break;
      case 6: kernel_grad<6>(g, gstride, padded, d.cout, d.cin, d.ho, dk.data()); break;
      case 7: kernel_grad<7>(g, gstride, padded, d.cout, d.cin, d.ho, dk.data()); break;
      default:
        kernel_grad_generic(g, gstride, padded, d.cout, d.cin, d.f, d.ho, dk.data());
        break;
    }
    for (std::size_t co = 0; co < d.cout; ++co) {
      float s = 0.0f;
      const float* plane = out_grad.data() + co * d.ho * d.wo;
      for (std::size_t i = 0; i < d.ho * d.wo; ++i) s += plane[i];
      db[co] = s;
    }
    grads.params.push_back(std::move(dk));
    grads.params.push_back(std::move(db));
  }
  if (targets != GradTargets::kParamsOnly) {
    grads.input = conv2d_input_grad(kernel, out_grad, pad, d.h, d.w);
  }
  return grads;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& out_grad) {
  require_same_shape(x, out_grad, "relu_backward");
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0f ? out_grad[i] : 0.0f;
  return g;
}

std::vector<float> gap_forward(const Tensor& a) {
  if (a.rank() != 3)
    throw ShapeError("gap: input must be [C,H,W], got " + shape_to_string(a.shape()));
  const std::size_t c = a.dim(0), hw = a.dim(1) * a.dim(2);
  if (hw == 0) throw ShapeError("gap: empty spatial dimensions");
  std::vector<float> out(c);
  const float inv = static_cast<float>(hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const float* p = a.data() + ch * hw;
    float s = 0.0f;
    for (std::size_t i = 0; i < hw; ++i) s += p[i];
    out[ch] = s / inv;
  }
  return out;
}

Tensor gap_backward(std::span<const float> out_grad, std::size_t height, std::size_t width) {
  if (height * width == 0) throw ShapeError("gap_backward: empty spatial dimensions");
  const std::size_t hw = height * width;
  Tensor g({out_grad.size(), height, width});
  const float denom = static_cast<float>(hw);
  for (std::size_t ch = 0; ch < out_grad.size(); ++ch) {
    const float v = out_grad[ch] / denom;
    std::fill_n(g.data() + ch * hw, hw, v);
  }
  return g;
}

std::vector<float> dense_forward(std::span<const float> x, const Tensor& weight,
                                 const Tensor& bias) {
  if (weight.rank() != 2 || weight.dim(1) != x.size() || bias.size() != weight.dim(0)) {
    throw ShapeError("dense: weight " + shape_to_string(weight.shape()) + ", bias " +
                     shape_to_string(bias.shape()) + " incompatible with input of length " +
                     std::to_string(x.size()));
  }
  const std::size_t out = weight.dim(0), in = weight.dim(1);
  std::vector<float> y(out);
  for (std::size_t o = 0; o < out; ++o) {
    float acc = bias[o];
    const float* w = weight.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) acc = madd(w[i], x[i], acc);
    y[o] = acc;
  }
  return y;
}

LayerGrads dense_backward(std::span<const float> x, const Tensor& weight,
                          std::span<const float> out_grad) {
  if (weight.rank() != 2 || weight.dim(1) != x.size() || weight.dim(0) != out_grad.size()) {
    throw ShapeError("dense_backward: weight " + shape_to_string(weight.shape()) +
                     " incompatible with input " + std::to_string(x.size()) + " / grad " +
                     std::to_string(out_grad.size()));
  }
  const std::size_t out = weight.dim(0), in = weight.dim(1);
  Tensor dw({out, in});
  Tensor db({out});
  Tensor dx({in});
  for (std::size_t o = 0; o < out; ++o) {
    db[o] = out_grad[o];
    for (std::size_t i = 0; i < in; ++i) dw[o * in + i] = out_grad[o] * x[i];
  }
  for (std::size_t i = 0; i < in; ++i) {
    float acc = 0.0f;
    for (std::size_t o = 0; o < out; ++o) acc = madd(weight[o * in + i], out_grad[o], acc);
    dx[i] = acc;
  }
  LayerGrads g;
  g.params.push_back(std::move(dw));
  g.params.push_back(std::move(db));
  g.input = std::move(dx);
  return g;
}

LossResult softmax_ce_loss(std::span<const float> logits, std::size_t target) {
  if (target >= logits.size()) {
    throw ConfigError("softmax_ce_loss: target class " + std::to_string(target) +
                      " out of range for " + std::to_string(logits.size()) + " logits");
  }
  double m = logits[0];
  for (float l : logits) m = std::max(m, static_cast<double>(l));
  double s = 0.0;
  for (float l : logits) s += std::exp(static_cast<double>(l) - m);
  LossResult r;
  r.loss = static_cast<float>(std::log(s) - (static_cast<double>(logits[target]) - m));
  r.logit_grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = std::exp(static_cast<double>(logits[i]) - m) / s;
    r.logit_grad[i] = static_cast<float>(p - (i == target ? 1.0 : 0.0));
  }
  return r;
}

}  // namespace aslab
