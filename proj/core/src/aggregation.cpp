#include "aslab/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "aslab/error.hpp"
#include "aslab/log.hpp"
#include "aslab/parallel.hpp"
#include "aslab/train.hpp"

namespace aslab {
namespace {

void check_image(const Tensor& image) {
  if (image.rank() != 3 || image.size() == 0) {
    throw ShapeError("aggregation: image must be a non-empty [C,H,W] tensor");
  }
}

void check_cams(std::span<const ScoreMap> cams, const Tensor& image) {
  if (cams.empty()) throw ConfigError("aggregation: at least one CAM is required");
  for (const ScoreMap& c : cams) {
    if (!c.normalized) throw ConfigError("aggregation: CAMs must be max-normalized");
    if (c.width != image.dim(2) || c.height != image.dim(1)) {
      throw ShapeError("aggregation: CAM size differs from the image");
    }
  }
}

float max_over(std::span<const ScoreMap> cams, std::size_t y0, std::size_t y1, std::size_t x0,
               std::size_t x1) {
  float m = 0.0f;
  for (const ScoreMap& c : cams)
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x) m = std::max(m, c.at(y, x));
  return m;
}

template <class Perturber>
ScoreMap sample_mean(const Model& model, std::size_t class_index,
                     std::size_t n, std::uint64_t seed, Perturber perturber) {
  if (n == 0) throw ConfigError("aggregation: n_samples must be >= 1");
  std::vector<ScoreMap> maps(n);
  parallel_for(n, [&](std::size_t i) {
    maps[i] = compute_saliency_raw(model, perturber(split_seed(seed, i)), class_index);
  });
  return mean_of_maps(maps);
}

struct CropSample {
  std::optional<CropBox> box;  // empty when rejected
  float weight = 0.0f;
  ScoreMap saliency;
};

float sigmoid(float s) {
  return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(s))));
}

CropSample evaluate_crop(const Model& model, const Tensor& image, std::size_t class_index,
                         const CropBox& box) {
  CropSample c;
  c.box = box;
  const ForwardTrace t = model.forward(crop_image(image, box));
  c.weight = sigmoid(t.logits.at(class_index));
  c.saliency = saliency_from_gradient(model.logit_input_gradient(t, class_index), class_index);
  return c;
}

ScoreMap paste_and_reduce(std::span<const CropSample> samples, std::size_t height,
                          std::size_t width, std::size_t class_index,
                          CropNormalization normalization) {
  std::vector<double> num(height * width, 0.0), den(height * width, 0.0);
  for (const CropSample& s : samples) {
    if (!s.box) continue;
    const CropBox& b = *s.box;
    const double w = s.weight;
    for (std::size_t y = 0; y < b.height; ++y)
      for (std::size_t x = 0; x < b.width; ++x) {
        const std::size_t p = (b.y0 + y) * width + b.x0 + x;
        num[p] += w * static_cast<double>(s.saliency.at(y, x));
        den[p] += w;
      }
  }
  ScoreMap out(class_index, width, height);
  const double n = static_cast<double>(samples.size());
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (normalization == CropNormalization::kStrictMean) {
      out.values[p] = static_cast<float>(num[p] / n);
    } else {
      out.values[p] = den[p] > 0.0 ? static_cast<float>(num[p] / den[p]) : 0.0f;
    }
  }
  return out;
}

}  // namespace

void validate(const CropPlan& plan) {
  if (plan.n_crops == 0) throw ConfigError("crop plan: n_crops must be >= 1");
  if (!(plan.area_min > 0.0 && plan.area_min <= plan.area_max && plan.area_max <= 1.0)) {
    throw ConfigError("crop plan: area range must satisfy 0 < min <= max <= 1");
  }
  if (!(plan.aspect_min > 0.0 && plan.aspect_min <= plan.aspect_max)) {
    throw ConfigError("crop plan: aspect range must satisfy 0 < min <= max");
  }
}

CropBox sample_crop(Rng& rng, const CropPlan& plan, std::size_t height, std::size_t width) {
  const double area = rng.uniform(plan.area_min, plan.area_max) *
                      static_cast<double>(height) * static_cast<double>(width);
  const double aspect = rng.uniform(plan.aspect_min, plan.aspect_max);
  auto side = [](double v, std::size_t limit) {
    const double r = std::round(v);
    return static_cast<std::size_t>(std::clamp(r, 1.0, static_cast<double>(limit)));
  };
  CropBox b;
  b.width = side(std::sqrt(area * aspect), width);
  b.height = side(std::sqrt(area / aspect), height);
  b.y0 = static_cast<std::size_t>(rng.below(height - b.height + 1));
  b.x0 = static_cast<std::size_t>(rng.below(width - b.width + 1));
  return b;
}

Tensor crop_image(const Tensor& image, const CropBox& box) {
  check_image(image);
  if (box.height == 0 || box.width == 0) throw ShapeError("crop: degenerate crop (area 0)");
  if (box.y0 + box.height > image.dim(1) || box.x0 + box.width > image.dim(2)) {
    throw ShapeError("crop: window exceeds the image");
  }
  const std::size_t c = image.dim(0);
  Tensor out({c, box.height, box.width});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < box.height; ++y)
      for (std::size_t x = 0; x < box.width; ++x)
        out.at(ch, y, x) = image.at(ch, box.y0 + y, box.x0 + x);
  return out;
}

std::vector<std::size_t> grid_edges(std::size_t extent, std::size_t grid) {
  const std::size_t g = std::max<std::size_t>(1, std::min(grid, extent));
  const std::size_t cell = extent / g;
  std::vector<std::size_t> e(g + 1);
  for (std::size_t i = 0; i < g; ++i) e[i] = i * cell;
  e[g] = extent;
  return e;
}

Tensor erase_cells(const Tensor& image, std::size_t grid, std::span<const std::uint8_t> erase) {
  check_image(image);
  const std::vector<std::size_t> ey = grid_edges(image.dim(1), grid);
  const std::vector<std::size_t> ex = grid_edges(image.dim(2), grid);
  const std::size_t gy = ey.size() - 1, gx = ex.size() - 1;
  if (erase.size() != gy * gx) {
    throw ShapeError("erase_cells: expected " + std::to_string(gy * gx) + " cell flags, got " +
                     std::to_string(erase.size()));
  }
  Tensor out = image;
  for (std::size_t cy = 0; cy < gy; ++cy)
    for (std::size_t cx = 0; cx < gx; ++cx) {
      if (!erase[cy * gx + cx]) continue;
      for (std::size_t ch = 0; ch < image.dim(0); ++ch)
        for (std::size_t y = ey[cy]; y < ey[cy + 1]; ++y)
          for (std::size_t x = ex[cx]; x < ex[cx + 1]; ++x) out.at(ch, y, x) = 0.0f;
    }
  return out;
}

ScoreMap mean_of_maps(std::span<const ScoreMap> maps) {
  if (maps.empty()) throw ConfigError("mean_of_maps: no maps");
  std::vector<double> sum(maps[0].size(), 0.0);
  for (const ScoreMap& m : maps) {
    if (m.size() != sum.size()) throw ShapeError("mean_of_maps: maps differ in size");
    for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += static_cast<double>(m.values[p]);
  }
  ScoreMap out(maps[0].class_id, maps[0].width, maps[0].height);
  const double n = static_cast<double>(maps.size());
  for (std::size_t p = 0; p < sum.size(); ++p) out.values[p] = static_cast<float>(sum[p] / n);
  return out;
}

ScoreMap smoothgrad(const Model& model, const Tensor& image, std::size_t class_index,
                    double sigma, std::size_t n, std::uint64_t seed) {
  check_image(image);
  if (!(sigma >= 0.0)) throw ConfigError("smoothgrad: sigma must be >= 0");
  const Perturb p = Perturb::gaussian(sigma);
  return sample_mean(model, class_index, n, seed,
                     [&](std::uint64_t s) { return perturb_image(image, p, s); });
}

ScoreMap binarymask(const Model& model, const Tensor& image, std::size_t class_index, double p,
                    std::size_t n, std::uint64_t seed) {
  check_image(image);
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("binarymask: p must lie in (0,1]");
  const Perturb pert = Perturb::binary(p);
  return sample_mean(model, class_index, n, seed,
                     [&](std::uint64_t s) { return perturb_image(image, pert, s); });
}

ScoreMap crop_aggregate(const Model& model, const Tensor& image, std::size_t class_index,
                        std::span<const CropBox> boxes, CropNormalization normalization) {
  check_image(image);
  if (boxes.empty()) throw ConfigError("crop_aggregate: no crops");
  std::vector<CropSample> samples(boxes.size());
  parallel_for(boxes.size(), [&](std::size_t i) {
    samples[i] = evaluate_crop(model, image, class_index, boxes[i]);
  });
  return paste_and_reduce(samples, image.dim(1), image.dim(2), class_index, normalization);
}

ScoreMap random_crop_agg(const Model& model, const Tensor& image, std::size_t class_index,
                         const CropPlan& plan, std::uint64_t seed) {
  check_image(image);
  validate(plan);
  std::vector<CropSample> samples(plan.n_crops);
  parallel_for(plan.n_crops, [&](std::size_t i) {
    Rng rng(split_seed(seed, i));
    const CropBox box = sample_crop(rng, plan, image.dim(1), image.dim(2));
    samples[i] = evaluate_crop(model, image, class_index, box);
  });
  return paste_and_reduce(samples, image.dim(1), image.dim(2), class_index, plan.normalization);
}

ScoreMap random_patch_agg(const Model& model, const Tensor& image, std::size_t class_index,
                          double p_erase, std::size_t n, std::uint64_t seed, std::size_t grid) {
  check_image(image);
  if (!(p_erase >= 0.0 && p_erase <= 1.0))
    throw ConfigError("random_patch: p_erase must lie in [0,1]");
  const std::size_t cells = (grid_edges(image.dim(1), grid).size() - 1) *
                            (grid_edges(image.dim(2), grid).size() - 1);
  return sample_mean(model, class_index, n, seed, [&](std::uint64_t s) {
    Rng rng(s);
    std::vector<std::uint8_t> erase(cells);
    bool any = false;
    for (auto& e : erase) any |= (e = rng.bernoulli(p_erase));
    return any ? erase_cells(image, grid, erase) : image;
  });
}

ScoreMap disc_patch_agg(const Model& model, const Tensor& image, std::size_t class_index,
                        std::span<const ScoreMap> cams, double alpha, std::size_t n,
                        std::uint64_t seed, std::size_t grid) {
  check_image(image);
  check_cams(cams, image);
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("disc_patch: alpha must lie in (0,1]");
  const std::vector<std::size_t> ey = grid_edges(image.dim(1), grid);
  const std::vector<std::size_t> ex = grid_edges(image.dim(2), grid);
  std::vector<double> prob;
  for (std::size_t cy = 0; cy + 1 < ey.size(); ++cy)
    for (std::size_t cx = 0; cx + 1 < ex.size(); ++cx)
      prob.push_back(alpha * max_over(cams, ey[cy], ey[cy + 1], ex[cx], ex[cx + 1]));
  return sample_mean(model, class_index, n, seed, [&](std::uint64_t s) {
    Rng rng(s);
    std::vector<std::uint8_t> erase(prob.size());
    bool any = false;
    for (std::size_t c = 0; c < prob.size(); ++c) any |= (erase[c] = rng.bernoulli(prob[c]));
    return any ? erase_cells(image, grid, erase) : image;
  });
}

ScoreMap disc_crop_agg(const Model& model, const Tensor& image, std::size_t class_index,
                       std::span<const ScoreMap> cams, double beta, const CropPlan& plan,
                       std::uint64_t seed) {
  check_image(image);
  check_cams(cams, image);
  validate(plan);
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("disc_crop: beta must lie in (0,1]");
  std::vector<CropSample> samples(plan.n_crops);
  parallel_for(plan.n_crops, [&](std::size_t i) {
    Rng rng(split_seed(seed, i));
    const CropBox box = sample_crop(rng, plan, image.dim(1), image.dim(2));
    const double s = max_over(cams, box.y0, box.y0 + box.height, box.x0, box.x0 + box.width);
    if (rng.bernoulli(std::max(0.0, beta - s))) {
      samples[i] = evaluate_crop(model, image, class_index, box);
    }
  });
  const bool any = std::any_of(samples.begin(), samples.end(),
                               [](const CropSample& s) { return s.box.has_value(); });
  if (!any) {
    log_warning("disc_crop: every crop was rejected; returning the zero map");
    return ScoreMap(class_index, image.dim(2), image.dim(1));
  }
  return paste_and_reduce(samples, image.dim(1), image.dim(2), class_index, plan.normalization);
}

}  // namespace aslab
