#include "aslab/resolve.hpp"

#include <cmath>
#include <string>

#include "aslab/error.hpp"
#include "aslab/log.hpp"
#include "aslab/ops.hpp"

namespace aslab {
namespace {

void check_stack(std::span<const ScoreMap> scores) {
  if (scores.empty()) throw ConfigError("resolve: empty score stack");
  for (const ScoreMap& m : scores) {
    if (!m.normalized) throw ConfigError("resolve: score maps must be normalized");
    if (m.width != scores[0].width || m.height != scores[0].height) {
      throw ShapeError("resolve: score maps differ in size");
    }
    if (m.class_id == 0 || m.class_id > 254) {
      throw ConfigError("resolve: class id " + std::to_string(m.class_id) +
                        " is not a foreground label (1..254)");
    }
  }
}

// Mirror index that repeats the edge sample: -1 -> 0, n -> n-1.
std::size_t mirror(long i, std::size_t n) {
  const long m = static_cast<long>(n);
  while (i < 0 || i >= m) i = i < 0 ? -i - 1 : 2 * m - i - 1;
  return static_cast<std::size_t>(i);
}

}  // namespace

LabelMask apply_threshold(const ResolvedScores& r, float tau) {
  LabelMask m(r.width, r.height);
  for (std::size_t p = 0; p < m.size(); ++p)
    m.pixels[p] = r.score[p] >= tau ? r.label[p] : kBackground;
  return m;
}

ResolvedScores prepare_basic(std::span<const ScoreMap> scores) {
  check_stack(scores);
  ResolvedScores r;
  r.width = scores[0].width;
  r.height = scores[0].height;
  const std::size_t n = r.width * r.height;
  r.score.assign(n, 0.0f);
  r.label.assign(n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
      const ScoreMap& a = scores[c];
      const ScoreMap& b = scores[best];
      if (a.values[p] > b.values[p] || (a.values[p] == b.values[p] && a.class_id < b.class_id)) {
        best = c;
      }
    }
    r.score[p] = scores[best].values[p];
    r.label[p] = static_cast<std::uint8_t>(scores[best].class_id);
  }
  return r;
}

LabelMask resolve_basic(std::span<const ScoreMap> scores, float tau) {
  return apply_threshold(prepare_basic(scores), tau);
}

std::vector<float> gaussian_kernel_1d(std::size_t size, double sigma) {
  if (size % 2 == 0)
    throw ConfigError("gaussian kernel size must be odd, got " + std::to_string(size));
  if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be positive");
  const double half = static_cast<double>(size / 2);
  std::vector<double> t(size);
  double sum = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - half;
    t[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += t[i];
  }
  std::vector<float> taps(size);
  for (std::size_t i = 0; i < size; ++i) taps[i] = static_cast<float>(t[i] / sum);
  return taps;
}

ScoreMap smooth_map(const ScoreMap& map, std::size_t kernel_size, double sigma) {
  std::size_t size = kernel_size;
  const std::size_t limit = std::min(map.width, map.height);
  if (limit == 0) throw ShapeError("smooth: empty map");
  if (size > limit) {
    size = limit % 2 ? limit : limit - 1;
    log_warning("smooth: kernel " + std::to_string(kernel_size) + " exceeds the " +
                std::to_string(map.width) + "x" + std::to_string(map.height) +
                " map; using " + std::to_string(size));
  }
  const std::vector<float> taps = gaussian_kernel_1d(size, sigma);
  const long half = static_cast<long>(size / 2);
  const std::size_t h = map.height, w = map.width;
  std::vector<float> tmp(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (std::size_t t = 0; t < size; ++t)
        acc = madd(taps[t], map.values[y * w + mirror(static_cast<long>(x + t) - half, w)], acc);
      tmp[y * w + x] = acc;
    }
  ScoreMap out = map;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (std::size_t t = 0; t < size; ++t)
        acc = madd(taps[t], tmp[mirror(static_cast<long>(y + t) - half, h) * w + x], acc);
      out.values[y * w + x] = acc;
    }
  return out;
}

ResolvedScores prepare_smooth(std::span<const ScoreMap> scores, std::size_t kernel_size,
                              double sigma) {
  check_stack(scores);
  std::vector<ScoreMap> smoothed;
  smoothed.reserve(scores.size());
  for (const ScoreMap& m : scores) smoothed.push_back(smooth_map(m, kernel_size, sigma));
  return prepare_basic(smoothed);
}

LabelMask resolve_smooth(std::span<const ScoreMap> scores, float tau, std::size_t kernel_size,
                         double sigma) {
  return apply_threshold(prepare_smooth(scores, kernel_size, sigma), tau);
}

ResolvedScores prepare_superpixel(std::span<const ScoreMap> scores, const SuperpixelMap& sp) {
  check_stack(scores);
  if (sp.width != scores[0].width || sp.height != scores[0].height) {
    throw ShapeError("resolve_superpixel: superpixel map size differs from the scores");
  }
  const std::size_t n = sp.width * sp.height, k = scores.size();
  std::vector<double> max_sum(sp.count, 0.0), class_sum(sp.count * k, 0.0);
  std::vector<std::size_t> count(sp.count, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const std::uint32_t s = sp.ids[p];
    float m = scores[0].values[p];
    for (std::size_t c = 0; c < k; ++c) {
      m = std::max(m, scores[c].values[p]);
      class_sum[s * k + c] += scores[c].values[p];
    }
    max_sum[s] += m;
    ++count[s];
  }
  std::vector<float> seg_score(sp.count);
  std::vector<std::uint8_t> seg_label(sp.count);
  for (std::size_t s = 0; s < sp.count; ++s) {
    const double cnt = static_cast<double>(count[s]);
    seg_score[s] = static_cast<float>(max_sum[s] / cnt);
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      const double a = class_sum[s * k + c] / cnt, b = class_sum[s * k + best] / cnt;
      if (a > b || (a == b && scores[c].class_id < scores[best].class_id)) best = c;
    }
    seg_label[s] = static_cast<std::uint8_t>(scores[best].class_id);
  }
  ResolvedScores r;
  r.width = sp.width;
  r.height = sp.height;
  r.score.resize(n);
  r.label.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    r.score[p] = seg_score[sp.ids[p]];
    r.label[p] = seg_label[sp.ids[p]];
  }
  return r;
}

LabelMask resolve_superpixel(std::span<const ScoreMap> scores, const SuperpixelMap& sp, float tau) {
  return apply_threshold(prepare_superpixel(scores, sp), tau);
}

LabelMask resolve_superpixel(std::span<const ScoreMap> scores, const Tensor& image, float tau,
                             const FelzenszwalbParams& params) {
  return resolve_superpixel(scores, felzenszwalb(image, params), tau);
}

}  // namespace aslab
