#include "aslab/hyperplane.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "aslab/error.hpp"
#include "aslab/parallel.hpp"
#include "json.hpp"

namespace aslab {
namespace {

float l2_norm_scaled(std::span<const float> w, float z) {
  double s = 0.0;
  for (float v : w) {
    const double q = static_cast<double>(v / z);
    s += q * q;
  }
  return static_cast<float>(std::sqrt(s));
}

}  // namespace

Tensor gap_input_jacobian(const Model& model, const Tensor& image) {
  const ForwardTrace t = model.forward(image);
  const std::size_t k = t.activation.dim(0);
  const std::size_t plane = image.size();
  Tensor jac({k, image.dim(0), image.dim(1), image.dim(2)});
  parallel_for(k, [&](std::size_t j) {
    std::vector<float> seed(k, 0.0f);
    seed[j] = 1.0f;
    const Tensor g = model.input_gradient(t, seed);
    std::copy(g.data(), g.data() + plane, jac.data() + j * plane);
  });
  return jac;
}

float cam_signed_distance(std::span<const float> a, std::span<const float> w, float z, float tau) {
  if (!(z > 0.0f)) throw NumericError("cam_signed_distance: degenerate normalizer Z <= 0");
  const float r = class_projection(w, a);
  return (r / z - tau) / l2_norm_scaled(w, z);
}

float sm_signed_distance(std::span<const float> a_prime, std::span<const float> w, float z_sm,
                         float tau) {
  if (!(z_sm > 0.0f)) throw NumericError("sm_signed_distance: degenerate normalizer Z_sm <= 0");
  const float r = std::fabs(class_projection(w, a_prime));
  return (r / z_sm - tau) / l2_norm_scaled(w, z_sm);
}

bool on_positive_side(float distance) noexcept { return !std::signbit(distance); }

const char* quadrant_name(Quadrant q) {
  switch (q) {
    case Quadrant::kHsrDr: return "HSR-DR";
    case Quadrant::kLsrDr: return "LSR-DR";
    case Quadrant::kHsrNdr: return "HSR-NDR";
    case Quadrant::kLsrNdr: return "LSR-NDR";
  }
  return "?";
}

std::string QuadrantReport::to_json() const {
  nlohmann::ordered_json j;
  j["class_id"] = class_id;
  j["tau_cam"] = tau_cam;
  j["tau_sm"] = tau_sm;
  j["gt_pixels"] = total;
  for (int q = 0; q < 4; ++q) {
    const char* name = quadrant_name(static_cast<Quadrant>(q));
    j["counts"][name] = counts[q];
    j["fractions"][name] = fractions[q];
  }
  return j.dump(2);
}

ScoreMap saliency_from_jacobian(const Tensor& jac, std::span<const float> w,
                                std::size_t class_id) {
  if (jac.rank() != 4 || jac.dim(0) != w.size()) {
    throw ShapeError("saliency_from_jacobian: jacobian " + shape_to_string(jac.shape()) +
                     " incompatible with " + std::to_string(w.size()) + " class weights");
  }
  const std::size_t k = jac.dim(0), c = jac.dim(1), h = jac.dim(2), wd = jac.dim(3);
  const std::size_t plane = c * h * wd;
  ScoreMap m(class_id, wd, h);
  std::vector<float> a(k);
  for (std::size_t p = 0; p < h * wd; ++p) {
    float best = 0.0f;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t j = 0; j < k; ++j) a[j] = jac[j * plane + ch * h * wd + p];
      const float v = std::fabs(class_projection(w, a));
      if (ch == 0 || v > best) best = v;
    }
    m.values[p] = best;
  }
  return m;
}

QuadrantAnalysis quadrant_decomposition(const Model& model, const Tensor& image,
                                        const LabelMask& gt, std::size_t class_index,
                                        std::uint8_t label, float tau_cam, float tau_sm) {
  if (image.rank() != 3 || image.dim(1) != gt.height || image.dim(2) != gt.width) {
    throw ShapeError("hyperplane: image and mask sizes differ");
  }
  if (std::find(gt.pixels.begin(), gt.pixels.end(), label) == gt.pixels.end()) {
    throw ConfigError("hyperplane: class " + std::to_string(label) + " absent from ground truth");
  }
  const std::span<const float> w = model.class_weights(class_index);
  const ForwardTrace t = model.forward(image);
  const Tensor& act = t.activation;
  if (act.dim(1) != gt.height || act.dim(2) != gt.width) {
    throw ShapeError("hyperplane: activation map size differs from the mask");
  }
  QuadrantAnalysis qa;
  const ScoreMap cam_raw = cam_from_activation(act, w, label);
  const float z = cam_raw.max_value();
  qa.cam = max_normalize(cam_raw);
  if (qa.cam.degenerate) throw NumericError("hyperplane: degenerate CAM (max w.a <= 0)");

  const Tensor jac = gap_input_jacobian(model, image);
  const ScoreMap sm_raw = saliency_from_jacobian(jac, w, label);
  const float z_sm = sm_raw.max_value();
  qa.saliency = max_normalize(sm_raw);
  if (qa.saliency.degenerate) throw NumericError("hyperplane: degenerate saliency (all zero)");

  qa.dr = partition_dr_ndr(qa.cam, gt, label, tau_cam);
  qa.hsr = partition_hsr_lsr(qa.saliency, gt, label, tau_sm);

  const std::size_t k = act.dim(0), c = image.dim(0), h = gt.height, wd = gt.width;
  const std::size_t plane = c * h * wd;
  std::vector<float> a(k), ap(k), best(k);
  QuadrantReport& r = qa.report;
  r.class_id = label;
  r.tau_cam = tau_cam;
  r.tau_sm = tau_sm;
  for (std::size_t p = 0; p < h * wd; ++p) {
    if (gt.pixels[p] != label) continue;
    for (std::size_t j = 0; j < k; ++j) a[j] = act[j * h * wd + p];
    // a' of the image channel with the largest |w.a'|, first on ties.
    float top = 0.0f;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t j = 0; j < k; ++j) ap[j] = jac[j * plane + ch * h * wd + p];
      const float v = std::fabs(class_projection(w, ap));
      if (ch == 0 || v > top) {
        top = v;
        best = ap;
      }
    }
    PixelGeometry g;
    g.i = p / wd;
    g.j = p % wd;
    g.cam_dist = cam_signed_distance(a, w, z, tau_cam);
    g.sm_dist = sm_signed_distance(best, w, z_sm, tau_sm);
    const bool dr = on_positive_side(g.cam_dist);
    const bool hsr = on_positive_side(g.sm_dist);
    if (dr != static_cast<bool>(qa.dr.high[p])) ++qa.cam_sign_mismatches;
    if (hsr != static_cast<bool>(qa.hsr.high[p])) ++qa.sm_sign_mismatches;
    g.quadrant = dr ? (hsr ? Quadrant::kHsrDr : Quadrant::kLsrDr)
                    : (hsr ? Quadrant::kHsrNdr : Quadrant::kLsrNdr);
    ++r.counts[static_cast<int>(g.quadrant)];
    ++r.total;
    qa.pixels.push_back(g);
  }
  for (int q = 0; q < 4; ++q) {
    r.fractions[q] = static_cast<double>(r.counts[q]) / static_cast<double>(r.total);
  }
  return qa;
}

std::string quadrant_csv(std::span<const PixelGeometry> pixels) {
  std::string out = "pixel_i,pixel_j,cam_dist,sm_dist,quadrant\n";
  char buf[128];
  for (const PixelGeometry& g : pixels) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g,%s\n", g.i, g.j, g.cam_dist, g.sm_dist,
                  quadrant_name(g.quadrant));
    out += buf;
  }
  return out;
}

}  // namespace aslab
