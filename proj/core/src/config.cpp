#include "aslab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "aslab/error.hpp"
#include "file_io.hpp"

namespace aslab {
namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct BadValue {
  std::string why;
};

double to_double(const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) throw BadValue{"not a number"};
  return v;
}

std::uint64_t to_u64(const std::string& text) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw BadValue{"not a non-negative integer"};
  }
  return v;
}

bool to_bool(const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw BadValue{"not a boolean"};
}

template <class F>
auto to_list(const std::string& text, F parse) {
  std::vector<decltype(parse(std::string()))> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse(item));
  if (out.empty()) throw BadValue{"empty list"};
  return out;
}

std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(to_u64(s)); }

std::string to_str(const std::string& s) { return trim(s); }

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data.mnist_dir", [](auto& c, auto& v) { c.data.mnist_dir = to_str(v); }},
      {"data.side", [](auto& c, auto& v) { c.data.side = to_size(v); }},
      {"data.train_count", [](auto& c, auto& v) { c.data.train_count = to_size(v); }},
      {"data.test_count", [](auto& c, auto& v) { c.data.test_count = to_size(v); }},

      {"network.kernel_size", [](auto& c, auto& v) { c.network.kernel_size = to_size(v); }},
      {"network.channels", [](auto& c, auto& v) { c.network.channels = to_size(v); }},
      {"network.depth", [](auto& c, auto& v) { c.network.depth = to_size(v); }},

      {"train.epochs", [](auto& c, auto& v) { c.train.epochs = to_size(v); }},
      {"train.batch_size", [](auto& c, auto& v) { c.train.batch_size = to_size(v); }},
      {"train.learning_rate", [](auto& c, auto& v) { c.train.learning_rate = to_double(v); }},
      {"train.momentum", [](auto& c, auto& v) { c.train.momentum = to_double(v); }},
      {"train.seed", [](auto& c, auto& v) { c.train.seed = to_u64(v); }},
      {"train.perturb", [](auto& c, auto& v) { c.train.perturb = parse_perturb(to_str(v)); }},
      {"train.flip", [](auto& c, auto& v) { c.train.standard_augments = to_bool(v); }},

      {"aggregate.method", [](auto& c, auto& v) { c.method.method = parse_map_method(to_str(v)); }},
      {"aggregate.seed", [](auto& c, auto& v) { c.method.seed = to_u64(v); }},
      {"aggregate.sigma", [](auto& c, auto& v) { c.method.sigma = to_double(v); }},
      {"aggregate.p", [](auto& c, auto& v) { c.method.p = to_double(v); }},
      {"aggregate.n_samples", [](auto& c, auto& v) { c.method.n_samples = to_size(v); }},
      {"aggregate.n_crops", [](auto& c, auto& v) { c.method.crop.n_crops = to_size(v); }},
      {"aggregate.area_min", [](auto& c, auto& v) { c.method.crop.area_min = to_double(v); }},
      {"aggregate.area_max", [](auto& c, auto& v) { c.method.crop.area_max = to_double(v); }},
      {"aggregate.aspect_min", [](auto& c, auto& v) { c.method.crop.aspect_min = to_double(v); }},
      {"aggregate.aspect_max", [](auto& c, auto& v) { c.method.crop.aspect_max = to_double(v); }},
      {"aggregate.normalization",
       [](auto& c, auto& v) {
         const std::string s = to_str(v);
         if (s == "coverage") {
           c.method.crop.normalization = CropNormalization::kCoverage;
         } else if (s == "strict") {
           c.method.crop.normalization = CropNormalization::kStrictMean;
         } else {
           throw BadValue{"expected coverage or strict"};
         }
       }},
      {"aggregate.p_erase", [](auto& c, auto& v) { c.method.p_erase = to_double(v); }},
      {"aggregate.grid", [](auto& c, auto& v) { c.method.grid = to_size(v); }},
      {"aggregate.alpha", [](auto& c, auto& v) { c.method.alpha = to_double(v); }},
      {"aggregate.beta", [](auto& c, auto& v) { c.method.beta = to_double(v); }},

      {"eval.tau_cam", [](auto& c, auto& v) { c.eval.tau_cam = static_cast<float>(to_double(v)); }},
      {"eval.tau_grid",
       [](auto& c, auto& v) {
         if (to_str(v) == "default") {
           c.eval.tau_grid = default_tau_grid();
           return;
         }
         std::vector<float> g;
         for (double d : to_list(v, to_double)) g.push_back(static_cast<float>(d));
         for (std::size_t i = 1; i < g.size(); ++i)
           if (!(g[i] > g[i - 1])) throw BadValue{"grid must be strictly increasing"};
         c.eval.tau_grid = std::move(g);
       }},
      {"eval.resolve", [](auto& c, auto& v) { c.eval.resolve = parse_resolve_kind(to_str(v)); }},
      {"eval.smooth_kernel", [](auto& c, auto& v) { c.eval.smooth_kernel = to_size(v); }},
      {"eval.smooth_sigma", [](auto& c, auto& v) { c.eval.smooth_sigma = to_double(v); }},
      {"eval.superpixel_k", [](auto& c, auto& v) { c.eval.superpixel.k = to_double(v); }},
      {"eval.superpixel_sigma", [](auto& c, auto& v) { c.eval.superpixel.sigma = to_double(v); }},
      {"eval.superpixel_min_size",
       [](auto& c, auto& v) { c.eval.superpixel.min_size = to_size(v); }},

      {"contribution_window.kernel_sizes",
       [](auto& c, auto& v) { c.kernel_sizes = to_list(v, to_size); }},
      {"contribution_window.checkpoint_dir",
       [](auto& c, auto& v) { c.checkpoint_dir = to_str(v); }},

      {"sensitivity.axis", [](auto& c, auto& v) { c.sensitivity_axis = to_str(v); }},
      {"sensitivity.values",
       [](auto& c, auto& v) { c.sensitivity_values = to_list(v, to_double); }},
  };
  return table;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("config: unknown key '" + key + "'");
  try {
    it->second(cfg, value);
  } catch (const BadValue& b) {
    throw ConfigError("config: " + key + ": invalid value '" + trim(value) + "' (" + b.why + ")");
  } catch (const ConfigError& e) {
    throw ConfigError("config: " + key + ": " + e.what());
  }
  cfg.provided.insert(key);
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: unknown key '" + section + "' outside a section");
    }
    for (const auto& [key, leaf] : body) {
      set_config_value(base, section + "." + key, leaf.get_value<std::string>());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path);
  return parse_config(std::string(bytes.begin(), bytes.end()), std::move(base));
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("config: override '" + assignment + "' is not section.key=value");
  }
  set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

}  // namespace aslab
