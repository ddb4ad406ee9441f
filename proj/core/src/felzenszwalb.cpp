#include "aslab/felzenszwalb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aslab/error.hpp"
#include "aslab/ops.hpp"

namespace aslab {
namespace {

struct Edge {
  float w;
  std::uint32_t a, b;
};

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  std::uint32_t join(std::uint32_t a, std::uint32_t b) {
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    if (rank_[a] == rank_[b]) ++rank_[a];
    return a;
  }
  std::size_t size(std::uint32_t root) const { return size_[root]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::vector<std::size_t> size_;
};

// Separable Gaussian with edge clamping, as in the reference implementation.
Tensor presmooth(const Tensor& image, double sigma) {
  const std::size_t half = static_cast<std::size_t>(std::ceil(4.0 * sigma));
  std::vector<double> taps(2 * half + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(half);
    taps[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  auto clamp_idx = [](long v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(n) - 1));
  };
  Tensor tmp(image.shape()), out(image.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t t = 0; t < taps.size(); ++t)
          acc += taps[t] *
                 image.at(ch, y, clamp_idx(static_cast<long>(x + t) - static_cast<long>(half), w));
        tmp.at(ch, y, x) = static_cast<float>(acc);
      }
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t t = 0; t < taps.size(); ++t)
          acc += taps[t] *
                 tmp.at(ch, clamp_idx(static_cast<long>(y + t) - static_cast<long>(half), h), x);
        out.at(ch, y, x) = static_cast<float>(acc);
      }
  }
  return out;
}

float pixel_distance(const Tensor& img, std::size_t plane, std::size_t p, std::size_t q) {
  float s = 0.0f;
  for (std::size_t ch = 0; ch < img.dim(0); ++ch) {
    const float d = img[ch * plane + p] - img[ch * plane + q];
    s = madd(d, d, s);
  }
  return std::sqrt(s);
}

}  // namespace

SuperpixelMap felzenszwalb(const Tensor& image, const FelzenszwalbParams& params) {
  if (image.rank() != 3 || image.size() == 0) {
    throw ShapeError("felzenszwalb: image must be a non-empty [C,H,W] tensor");
  }
  if (!(params.k > 0.0)) throw ConfigError("felzenszwalb: k must be positive");
  if (params.min_size < 1) throw ConfigError("felzenszwalb: min_size must be >= 1");
  if (!(params.sigma >= 0.0)) throw ConfigError("felzenszwalb: sigma must be >= 0");
  if (params.connectivity != 4 && params.connectivity != 8) {
    throw ConfigError("felzenszwalb: connectivity must be 4 or 8");
  }
  const std::size_t h = image.dim(1), w = image.dim(2), n = h * w;
  const Tensor img = params.sigma > 0.0 ? presmooth(image, params.sigma) : image;

  std::vector<Edge> edges;
  edges.reserve(n * (params.connectivity == 8 ? 4 : 2));
  auto add = [&](std::size_t p, std::size_t q) {
    edges.push_back({pixel_distance(img, n, p, q), static_cast<std::uint32_t>(p),
                     static_cast<std::uint32_t>(q)});
  };
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      if (x + 1 < w) add(p, p + 1);
      if (y + 1 < h) add(p, p + w);
      if (params.connectivity == 8) {
        if (x + 1 < w && y + 1 < h) add(p, p + w + 1);
        if (x + 1 < w && y > 0) add(p, p - w + 1);
      }
    }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& a, const Edge& b) { return a.w < b.w; });

  DisjointSet ds(n);
  std::vector<double> thresh(n, params.k);  // Int(C) + k/|C| with Int = 0, |C| = 1
  for (const Edge& e : edges) {
    std::uint32_t a = ds.find(e.a), b = ds.find(e.b);
    if (a == b) continue;
    if (e.w <= thresh[a] && e.w <= thresh[b]) {
      const std::uint32_t r = ds.join(a, b);
      thresh[r] = static_cast<double>(e.w) + params.k / static_cast<double>(ds.size(r));
    }
  }
  for (const Edge& e : edges) {
    std::uint32_t a = ds.find(e.a), b = ds.find(e.b);
    if (a != b && (ds.size(a) < params.min_size || ds.size(b) < params.min_size)) ds.join(a, b);
  }

  SuperpixelMap sp;
  sp.width = w;
  sp.height = h;
  sp.params = params;
  sp.ids.assign(n, 0);
  std::vector<std::uint32_t> relabel(n, UINT32_MAX);
  for (std::size_t p = 0; p < n; ++p) {
    const std::uint32_t r = ds.find(static_cast<std::uint32_t>(p));
    if (relabel[r] == UINT32_MAX) relabel[r] = static_cast<std::uint32_t>(sp.count++);
    sp.ids[p] = relabel[r];
  }
  return sp;
}

std::vector<std::size_t> segment_sizes(const SuperpixelMap& sp) {
  std::vector<std::size_t> sizes(sp.count, 0);
  for (std::uint32_t id : sp.ids) ++sizes.at(id);
  return sizes;
}

bool segments_connected(const SuperpixelMap& sp, int connectivity) {
  const std::size_t h = sp.height, w = sp.width;
  std::vector<std::uint8_t> seen(h * w, 0), started(sp.count, 0);
  std::vector<std::size_t> stack;
  for (std::size_t p = 0; p < h * w; ++p) {
    if (seen[p]) continue;
    const std::uint32_t id = sp.ids[p];
    if (started[id]) return false;  // a second, disjoint piece of the same segment
    started[id] = 1;
    stack.push_back(p);
    seen[p] = 1;
    while (!stack.empty()) {
      const std::size_t q = stack.back();
      stack.pop_back();
      const long qy = static_cast<long>(q / w), qx = static_cast<long>(q % w);
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          if ((dy == 0 && dx == 0) || (connectivity == 4 && dy != 0 && dx != 0)) continue;
          const long ny = qy + dy, nx = qx + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<long>(h) || nx >= static_cast<long>(w))
            continue;
          const std::size_t r = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (!seen[r] && sp.ids[r] == id) {
            seen[r] = 1;
            stack.push_back(r);
          }
        }
    }
  }
  return true;
}

}  // namespace aslab
