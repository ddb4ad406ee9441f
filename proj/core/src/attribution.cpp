#include "aslab/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aslab/error.hpp"
#include "aslab/ops.hpp"

namespace aslab {

float ScoreMap::max_value() const {
  if (values.empty()) return 0.0f;
  return *std::max_element(values.begin(), values.end());
}

float class_projection(std::span<const float> w, std::span<const float> a) {
  if (w.size() != a.size()) {
    throw ShapeError("class_projection: weight length " + std::to_string(w.size()) +
                     " vs activation length " + std::to_string(a.size()));
  }
  float acc = 0.0f;
  for (std::size_t i = 0; i < w.size(); ++i) acc = madd(w[i], a[i], acc);
  return acc;
}

ScoreMap cam_from_activation(const Tensor& activation, std::span<const float> w,
                             std::size_t class_id) {
  if (activation.rank() != 3 || activation.dim(0) != w.size()) {
    throw ShapeError("cam: activation " + shape_to_string(activation.shape()) +
                     " incompatible with " + std::to_string(w.size()) + " class weights");
  }
  const std::size_t k = activation.dim(0), h = activation.dim(1), wd = activation.dim(2);
  ScoreMap m(class_id, wd, h);
  std::vector<float> a(k);
  for (std::size_t p = 0; p < h * wd; ++p) {
    for (std::size_t c = 0; c < k; ++c) a[c] = activation[c * h * wd + p];
    m.values[p] = class_projection(w, a);
  }
  return m;
}

ScoreMap max_normalize(const ScoreMap& raw) {
  ScoreMap m = raw;
  m.normalized = true;
  const float z = raw.max_value();
  if (!(z > 0.0f)) {
    std::fill(m.values.begin(), m.values.end(), 0.0f);
    m.degenerate = true;
    return m;
  }
  m.degenerate = false;
  for (float& v : m.values) v = std::max(v, 0.0f) / z;
  return m;
}

ScoreMap compute_cam_raw(const Model& model, const Tensor& image, std::size_t class_index) {
  const std::span<const float> w = model.class_weights(class_index);
  return cam_from_activation(model.forward(image).activation, w, class_index);
}

ScoreMap compute_cam(const Model& model, const Tensor& image, std::size_t class_index) {
  return max_normalize(compute_cam_raw(model, image, class_index));
}

ScoreMap saliency_from_gradient(const Tensor& g, std::size_t class_id) {
  if (g.rank() != 3) throw ShapeError("saliency: gradient must be [C,H,W]");
  const std::size_t c = g.dim(0), h = g.dim(1), w = g.dim(2);
  ScoreMap m(class_id, w, h);
  for (std::size_t p = 0; p < h * w; ++p) {
    float best = std::fabs(g[p]);
    for (std::size_t ch = 1; ch < c; ++ch) best = std::max(best, std::fabs(g[ch * h * w + p]));
    m.values[p] = best;
  }
  return m;
}

ScoreMap compute_saliency_raw(const Model& model, const Tensor& image, std::size_t class_index) {
  const ForwardTrace t = model.forward(image);
  return saliency_from_gradient(model.logit_input_gradient(t, class_index), class_index);
}

ScoreMap compute_saliency(const Model& model, const Tensor& image, std::size_t class_index) {
  return max_normalize(compute_saliency_raw(model, image, class_index));
}

ScoreMap upsample_map(const ScoreMap& map, std::size_t width, std::size_t height) {
  if (map.width == 0 || map.height == 0) throw ShapeError("upsample_map: empty map");
  if (map.width == width && map.height == height) return map;
  ScoreMap out = map;
  out.width = width;
  out.height = height;
  out.values.assign(width * height, 0.0f);
  for (std::size_t i = 0; i < height; ++i)
    for (std::size_t j = 0; j < width; ++j)
      out.values[i * width + j] = map.at(i * map.height / height, j * map.width / width);
  return out;
}

RegionPartition partition_by_threshold(const ScoreMap& map, const LabelMask& gt,
                                       std::uint8_t class_id, float tau) {
  if (!map.normalized) throw ConfigError("partition: score map must be max-normalized");
  if (map.width != gt.width || map.height != gt.height) {
    throw ShapeError("partition: map is " + std::to_string(map.width) + "x" +
                     std::to_string(map.height) + ", mask is " + std::to_string(gt.width) + "x" +
                     std::to_string(gt.height));
  }
  RegionPartition p;
  p.class_id = class_id;
  p.width = gt.width;
  p.height = gt.height;
  p.threshold = tau;
  p.high.assign(gt.size(), 0);
  p.low.assign(gt.size(), 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.pixels[i] != class_id) continue;
    if (map.values[i] >= tau) {
      p.high[i] = 1;
      ++p.high_count;
    } else {
      p.low[i] = 1;
      ++p.low_count;
    }
  }
  return p;
}

RegionPartition partition_dr_ndr(const ScoreMap& cam, const LabelMask& gt, std::uint8_t class_id,
                                 float tau_cam) {
  return partition_by_threshold(cam, gt, class_id, tau_cam);
}

RegionPartition partition_hsr_lsr(const ScoreMap& sm, const LabelMask& gt, std::uint8_t class_id,
                                  float tau_sm) {
  return partition_by_threshold(sm, gt, class_id, tau_sm);
}

LabelMask partition_mask(const RegionPartition& p) {
  LabelMask m(p.width, p.height);
  for (std::size_t i = 0; i < m.size(); ++i) m.pixels[i] = p.high[i] ? 1 : (p.low[i] ? 2 : 0);
  return m;
}

Tensor stack_maps(std::span<const ScoreMap> maps) {
  if (maps.empty()) throw ShapeError("stack_maps: no maps");
  const std::size_t w = maps[0].width, h = maps[0].height;
  Tensor t({maps.size(), h, w});
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (maps[i].width != w || maps[i].height != h) {
      throw ShapeError("stack_maps: map " + std::to_string(i) + " has a different size");
    }
    std::copy(maps[i].values.begin(), maps[i].values.end(), t.data() + i * w * h);
  }
  return t;
}

std::vector<ScoreMap> unstack_maps(const Tensor& stack, bool normalized,
                                   std::span<const std::size_t> ids) {
  Tensor t = stack;
  if (t.rank() == 2) t = t.reshaped({1, t.dim(0), t.dim(1)});
  if (t.rank() != 3) throw ShapeError("unstack_maps: expected [n,H,W] or [H,W]");
  const std::size_t n = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (!ids.empty() && ids.size() != n) {
    throw ShapeError("unstack_maps: " + std::to_string(ids.size()) + " class ids for " +
                     std::to_string(n) + " maps");
  }
  std::vector<ScoreMap> maps;
  for (std::size_t i = 0; i < n; ++i) {
    ScoreMap m(ids.empty() ? i : ids[i], w, h);
    std::copy(t.data() + i * w * h, t.data() + (i + 1) * w * h, m.values.begin());
    m.normalized = normalized;
    if (normalized) {
      for (float v : m.values) {
        if (v < 0.0f || v > 1.0f) {
          throw FormatError("score map " + std::to_string(i) + " has values outside [0,1]");
        }
      }
      m.degenerate = m.max_value() == 0.0f;
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

}  // namespace aslab
