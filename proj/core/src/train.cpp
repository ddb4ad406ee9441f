#include "aslab/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "aslab/error.hpp"
#include "aslab/log.hpp"
#include "aslab/ops.hpp"
#include "aslab/parallel.hpp"
#include "aslab/rng.hpp"

namespace aslab {
namespace {

enum Stream : std::uint64_t {
  kInitStream = 1,
  kShuffleStream = 2,
  kFlipStream = 3,
  kPerturbStream = 4
};

Tensor flip_horizontal(const Tensor& image) {
  Tensor out(image.shape());
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out.at(ch, y, x) = image.at(ch, y, w - 1 - x);
  return out;
}

std::size_t argmax(std::span<const float> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::string to_string(const Perturb& p) {
  std::ostringstream os;
  switch (p.kind) {
    case PerturbKind::kNone: return "none";
    case PerturbKind::kGaussian: os << "gaussian:" << p.sigma; break;
    case PerturbKind::kBinary: os << "binary:" << p.p; break;
  }
  return os.str();
}

Perturb parse_perturb(const std::string& text) {
  if (text == "none" || text.empty()) return Perturb::none();
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (colon == std::string::npos) {
    throw ConfigError("perturb: expected none, gaussian:<sigma> or binary:<p>, got '" + text + "'");
  }
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw ConfigError("perturb: invalid number in '" + text + "'");
  }
  if (kind == "gaussian") return Perturb::gaussian(v);
  if (kind == "binary") return Perturb::binary(v);
  throw ConfigError("perturb: unknown kind '" + kind + "'");
}

Tensor perturb_image(const Tensor& image, const Perturb& p, std::uint64_t seed) {
  if (p.kind == PerturbKind::kNone) return image;
  Rng rng(seed);
  Tensor out = image;
  if (p.kind == PerturbKind::kGaussian) {
    const float sigma = static_cast<float>(p.sigma);
    for (float& v : out.values()) v = v + sigma * static_cast<float>(rng.normal());
    return out;
  }
  const std::size_t c = image.dim(0), hw = image.dim(1) * image.dim(2);
  for (std::size_t i = 0; i < hw; ++i) {
    const float m = rng.bernoulli(p.p) ? 1.0f : 0.0f;
    for (std::size_t ch = 0; ch < c; ++ch) out[ch * hw + i] = out[ch * hw + i] * m;
  }
  return out;
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw ConfigError("train.momentum must lie in [0,1)");
  }
  if (cfg.perturb.kind == PerturbKind::kGaussian && !(cfg.perturb.sigma >= 0.0)) {
    throw ConfigError("train.perturb: sigma must be >= 0");
  }
  if (cfg.perturb.kind == PerturbKind::kBinary && !(cfg.perturb.p > 0.0 && cfg.perturb.p <= 1.0)) {
    throw ConfigError("train.perturb: p must lie in (0,1]");
  }
}

std::uint64_t init_seed(std::uint64_t seed) { return split_seed(seed, kInitStream); }

StepResult sgd_step(Model& model, std::vector<Tensor>& velocity, std::span<const Tensor> images,
                std::span<const std::size_t> targets, const TrainConfig& cfg) {
  const std::size_t n = images.size();
  if (n == 0 || targets.size() != n) throw ShapeError("sgd_step: empty or mismatched batch");
  std::vector<std::vector<Tensor>> grads(n);
  std::vector<double> losses(n);
  std::vector<std::uint8_t> hit(n);
  parallel_for(n, [&](std::size_t i) {
    const ForwardTrace t = model.forward(images[i]);
    const LossResult l = softmax_ce_loss(t.logits, targets[i]);
    losses[i] = l.loss;
    hit[i] = argmax(t.logits) == targets[i];
    grads[i] = model.parameter_gradients(t, l.logit_grad);
  });
  StepResult r;
  for (std::size_t i = 0; i < n; ++i) {
    r.loss += losses[i];
    r.correct += hit[i];
  }
  r.loss /= static_cast<double>(n);
  if (!std::isfinite(r.loss)) throw NumericError("training diverged: non-finite loss");

  auto& params = model.params();
  if (velocity.size() != params.size()) {
    velocity.clear();
    for (const Tensor& p : params) velocity.emplace_back(p.shape());
  }
  const float inv_n = 1.0f / static_cast<float>(n);
  const float lr = static_cast<float>(cfg.learning_rate);
  const float mu = static_cast<float>(cfg.momentum);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor sum = grads[0][k];
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t e = 0; e < sum.size(); ++e) sum[e] += grads[i][k][e];
    Tensor& v = velocity[k];
    Tensor& p = params[k];
    for (std::size_t e = 0; e < p.size(); ++e) {
      v[e] = mu * v[e] + sum[e] * inv_n;
      p[e] = p[e] - lr * v[e];
    }
  }
  return r;
}

TrainStats train(Model& model, std::span<const SegSample> data, const TrainConfig& cfg) {
  validate(cfg);
  TrainStats stats;
  if (cfg.epochs == 0) return stats;
  if (data.empty()) throw ConfigError("train: dataset is empty");
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(split_seed(cfg.seed, kShuffleStream));
  const std::uint64_t flip_base = split_seed(cfg.seed, kFlipStream);
  const std::uint64_t perturb_base = split_seed(cfg.seed, kPerturbStream);
  std::vector<Tensor> velocity;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      std::vector<Tensor> images(b);
      std::vector<std::size_t> targets(b);
      parallel_for(b, [&](std::size_t j) {
        const std::size_t idx = order[start + j];
        const std::uint64_t counter = epoch * n + idx;
        Tensor img = data[idx].image;
        if (cfg.standard_augments && Rng(split_seed(flip_base, counter)).bernoulli(0.5)) {
          img = flip_horizontal(img);
        }
        images[j] = perturb_image(img, cfg.perturb, split_seed(perturb_base, counter));
        targets[j] = data[idx].digit;
      });
      StepResult step;
      try {
        step = sgd_step(model, velocity, images, targets, cfg);
      } catch (const NumericError&) {
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch + 1) + ", sample offset " +
                           std::to_string(start));
      }
      loss_sum += step.loss * static_cast<double>(b);
      correct += step.correct;
    }
    EpochStats es{loss_sum / static_cast<double>(n),
                  static_cast<double>(correct) / static_cast<double>(n)};
    stats.epochs.push_back(es);
    std::ostringstream os;
    os << "epoch " << epoch + 1 << "/" << cfg.epochs << " loss " << es.mean_loss << " acc "
       << es.accuracy;
    log_info(os.str());
  }
  return stats;
}

double accuracy(const Model& model, std::span<const SegSample> data) {
  if (data.empty()) return 0.0;
  std::vector<std::uint8_t> hit(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    hit[i] = argmax(model.classify(data[i].image)) == data[i].digit;
  });
  return static_cast<double>(std::accumulate(hit.begin(), hit.end(), std::size_t{0})) /
         static_cast<double>(data.size());
}

}  // namespace aslab
