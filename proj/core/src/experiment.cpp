#include "aslab/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "aslab/checkpoint.hpp"
#include "aslab/error.hpp"
#include "aslab/log.hpp"
#include "aslab/parallel.hpp"
#include "aslab/rng.hpp"

namespace aslab {
namespace {

struct MethodName {
  MapMethod method;
  const char* name;
};

constexpr MethodName kMethodNames[] = {
    {MapMethod::kCam, "cam"},
    {MapMethod::kSaliency, "saliency"},
    {MapMethod::kSmoothGrad, "smoothgrad"},
    {MapMethod::kBinaryMask, "binarymask"},
    {MapMethod::kRandomCrop, "random_crop"},
    {MapMethod::kRandomPatch, "random_patch"},
    {MapMethod::kDiscPatch, "disc_patch"},
    {MapMethod::kDiscCrop, "disc_crop"},
};

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string format_accuracy(double v) { return v < 0.0 ? "nan" : format_value(v); }

SweepRow failed_row(const std::string& axis, double value, const std::string& method,
                    const std::string& why, float tau) {
  SweepRow r;
  r.axis = axis;
  r.value = value;
  r.method = method;
  r.status = why;
  r.report.miou = std::nan("");
  r.report.tau = tau;
  return r;
}

// Keeps CSV fields free of separators.
std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

std::size_t checked_count(double v, const std::string& axis) {
  if (!(v >= 1.0) || v != std::floor(v)) {
    throw ConfigError("sensitivity." + axis + ": values must be positive integers, got " +
                      format_value(v));
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string to_string(MapMethod m) {
  for (const MethodName& n : kMethodNames)
    if (n.method == m) return n.name;
  return "unknown";
}

MapMethod parse_map_method(const std::string& name) {
  for (const MethodName& n : kMethodNames)
    if (name == n.name) return n.method;
  throw ConfigError("unknown method '" + name + "'");
}

std::string to_string(ResolveKind r) {
  switch (r) {
    case ResolveKind::kBasic: return "basic";
    case ResolveKind::kSmooth: return "smooth";
    case ResolveKind::kSuperpixel: return "superpixel";
  }
  return "unknown";
}

ResolveKind parse_resolve_kind(const std::string& name) {
  if (name == "basic") return ResolveKind::kBasic;
  if (name == "smooth") return ResolveKind::kSmooth;
  if (name == "superpixel") return ResolveKind::kSuperpixel;
  throw ConfigError("unknown resolve '" + name + "' (basic, smooth, superpixel)");
}

ScoreMap method_map_raw(const Model& model, const Tensor& image, std::size_t class_index,
                        const MethodConfig& cfg, std::uint64_t stream,
                        std::span<const ScoreMap> cams) {
  const std::uint64_t seed = split_seed(cfg.seed, stream);
  switch (cfg.method) {
    case MapMethod::kCam: return compute_cam_raw(model, image, class_index);
    case MapMethod::kSaliency: return compute_saliency_raw(model, image, class_index);
    case MapMethod::kSmoothGrad:
      return smoothgrad(model, image, class_index, cfg.sigma, cfg.n_samples, seed);
    case MapMethod::kBinaryMask:
      return binarymask(model, image, class_index, cfg.p, cfg.n_samples, seed);
    case MapMethod::kRandomCrop: return random_crop_agg(model, image, class_index, cfg.crop, seed);
    case MapMethod::kRandomPatch:
      return random_patch_agg(model, image, class_index, cfg.p_erase, cfg.n_samples, seed,
                              cfg.grid);
    case MapMethod::kDiscPatch:
      return disc_patch_agg(model, image, class_index, cams, cfg.alpha, cfg.n_samples, seed,
                            cfg.grid);
    case MapMethod::kDiscCrop:
      return disc_crop_agg(model, image, class_index, cams, cfg.beta, cfg.crop, seed);
  }
  throw ConfigError("unknown method");
}

ResolvedScores prepare_resolve(std::span<const ScoreMap> maps, const EvalConfig& eval,
                               const Tensor& image) {
  switch (eval.resolve) {
    case ResolveKind::kBasic: return prepare_basic(maps);
    case ResolveKind::kSmooth: return prepare_smooth(maps, eval.smooth_kernel, eval.smooth_sigma);
    case ResolveKind::kSuperpixel:
      if (image.size() == 0) throw ConfigError("superpixel resolve needs the input image");
      return prepare_superpixel(maps, felzenszwalb(image, eval.superpixel));
  }
  throw ConfigError("unknown resolve");
}

std::vector<SweepItem> build_sweep_items(const Model& model, std::span<const SegSample> data,
                                         const MethodConfig& method, const EvalConfig& eval) {
  std::vector<SweepItem> items(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const SegSample& s = data[i];
    const std::uint8_t id = s.class_id();
    ScoreMap cam = compute_cam(model, s.image, s.digit);
    cam.class_id = id;
    ScoreMap map;
    if (method.method == MapMethod::kCam) {
      map = cam;
    } else {
      map = max_normalize(
          method_map_raw(model, s.image, s.digit, method, i, std::span<const ScoreMap>(&cam, 1)));
      map.class_id = id;
    }
    SweepItem& item = items[i];
    item.prepared = prepare_resolve(std::span<const ScoreMap>(&map, 1), eval, s.image);
    item.gt = s.mask;
    item.dr.push_back(partition_dr_ndr(cam, s.mask, id, eval.tau_cam));
  });
  return items;
}

ThresholdSweep evaluate_method(const Model& model, std::span<const SegSample> data,
                               const MethodConfig& method, const EvalConfig& eval) {
  if (data.empty()) throw ConfigError("evaluate: dataset is empty");
  const std::vector<SweepItem> items = build_sweep_items(model, data, method, eval);
  return threshold_sweep(items, eval.tau_grid, kMnistSegClasses);
}

std::string SweepResult::csv_header() {
  return "axis,value,method,status," + MetricsReport::csv_header() +
         ",train_accuracy,test_accuracy";
}

std::string SweepResult::csv() const {
  std::string out = csv_header() + "\n";
  for (const SweepRow& r : rows) {
    out += r.axis + "," + format_value(r.value) + "," + r.method + "," + sanitize(r.status) + "," +
           r.report.csv_row() + "," + format_accuracy(r.train_accuracy) + "," +
           format_accuracy(r.test_accuracy) + "\n";
  }
  return out;
}

const SweepRow* SweepResult::find(double value, const std::string& method) const {
  for (const SweepRow& r : rows)
    if (r.value == value && r.method == method) return &r;
  return nullptr;
}

SweepResult cmd_contribution_window(const ContributionWindowConfig& cfg,
                                    std::span<const SegSample> train_set,
                                    std::span<const SegSample> test_set,
                                    std::vector<Model>* models) {
  if (cfg.kernel_sizes.empty()) throw ConfigError("contribution_window.kernel_sizes is empty");
  for (std::size_t f : cfg.kernel_sizes) {
    if (f == 0 || f % 2 == 0) {
      throw ConfigError("contribution_window.kernel_sizes: " + std::to_string(f) +
                        " is not an odd positive size");
    }
  }
  if (train_set.empty() || test_set.empty()) {
    throw ConfigError("contribution_window: train and test sets must be nonempty");
  }
  validate(cfg.train);
  const std::size_t side = test_set[0].image.dim(1);
  const float fail_tau = cfg.eval.tau_grid.empty() ? 0.0f : cfg.eval.tau_grid.front();

  SweepResult result;
  result.axis = "kernel_size";
  for (std::size_t f : cfg.kernel_sizes) {
    const double fv = static_cast<double>(f);
    Model model = Model::build(mnist_spec(f, side, cfg.channels, cfg.depth, 10),
                               init_seed(cfg.train.seed));
    log_info("kernel size " + std::to_string(f) + ": training on " +
             std::to_string(train_set.size()) + " images");
    try {
      train(model, train_set, cfg.train);
    } catch (const NumericError& e) {
      log_warning("kernel size " + std::to_string(f) + ": " + e.what());
      for (const char* m : {"cam", "saliency"})
        result.rows.push_back(failed_row(result.axis, fv, m, e.what(), fail_tau));
      if (models) models->push_back(std::move(model));
      continue;
    }
    if (!cfg.checkpoint_dir.empty()) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      save_checkpoint(make_checkpoint(model, cfg.train),
                      cfg.checkpoint_dir / ("model_f" + std::to_string(f) + ".aslc"));
    }
    const double train_acc = accuracy(model, train_set);
    const double test_acc = accuracy(model, test_set);
    for (MapMethod m : {MapMethod::kCam, MapMethod::kSaliency}) {
      MethodConfig mc;
      mc.method = m;
      SweepRow row;
      row.axis = result.axis;
      row.value = fv;
      row.method = to_string(m);
      try {
        row.report = evaluate_method(model, test_set, mc, cfg.eval).best;
      } catch (const Error& e) {
        row = failed_row(result.axis, fv, to_string(m), e.what(), fail_tau);
      }
      row.train_accuracy = train_acc;
      row.test_accuracy = test_acc;
      result.rows.push_back(std::move(row));
    }
    if (models) models->push_back(std::move(model));
  }
  return result;
}

MethodConfig sensitivity_point(const SensitivityConfig& cfg, double value) {
  MethodConfig m = cfg.base;
  const std::string& axis = cfg.axis;
  if (axis == "sigma") {
    if (!(value >= 0.0)) throw ConfigError("sensitivity.sigma: values must be >= 0");
    m.method = MapMethod::kSmoothGrad;
    m.sigma = value;
  } else if (axis == "p") {
    if (!(value > 0.0 && value <= 1.0))
      throw ConfigError("sensitivity.p: values must lie in (0,1]");
    m.method = MapMethod::kBinaryMask;
    m.p = value;
  } else if (axis == "n_samples") {
    switch (m.method) {
      case MapMethod::kSmoothGrad:
      case MapMethod::kBinaryMask:
      case MapMethod::kRandomPatch:
      case MapMethod::kDiscPatch: break;
      default: m.method = MapMethod::kSmoothGrad;
    }
    m.n_samples = checked_count(value, axis);
  } else if (axis == "n_crops") {
    m.method = MapMethod::kRandomCrop;
    m.crop.n_crops = checked_count(value, axis);
  } else if (axis == "crop_scale") {
    if (!(value > 0.0 && value <= 1.0)) {
      throw ConfigError("sensitivity.crop_scale: values must lie in (0,1]");
    }
    m.method = MapMethod::kRandomCrop;
    m.crop.area_min = value;
    m.crop.area_max = std::max(m.crop.area_max, value);
  } else {
    throw ConfigError("sensitivity.axis: unknown axis '" + axis +
                      "' (sigma, p, n_samples, n_crops, crop_scale)");
  }
  return m;
}

SweepResult cmd_sensitivity(const Model& model, std::span<const SegSample> test_set,
                            const SensitivityConfig& cfg) {
  if (cfg.values.empty()) throw ConfigError("sensitivity.values is empty");
  for (std::size_t i = 1; i < cfg.values.size(); ++i) {
    if (!(cfg.values[i] > cfg.values[i - 1])) {
      throw ConfigError("sensitivity.values must be strictly increasing");
    }
  }
  if (test_set.empty()) throw ConfigError("sensitivity: dataset is empty");
  // Axis errors surface before any work is done.
  sensitivity_point(cfg, cfg.values.front());
  const float fail_tau = cfg.eval.tau_grid.empty() ? 0.0f : cfg.eval.tau_grid.front();

  SweepResult result;
  result.axis = cfg.axis;
  for (double v : cfg.values) {
    std::string method = "?";
    try {
      const MethodConfig m = sensitivity_point(cfg, v);
      method = to_string(m.method);
      SweepRow row;
      row.axis = cfg.axis;
      row.value = v;
      row.method = method;
      row.report = evaluate_method(model, test_set, m, cfg.eval).best;
      result.rows.push_back(std::move(row));
    } catch (const Error& e) {
      log_warning("sensitivity " + cfg.axis + "=" + format_value(v) + ": " + e.what());
      result.rows.push_back(failed_row(cfg.axis, v, method, e.what(), fail_tau));
    }
  }
  return result;
}

}  // namespace aslab
