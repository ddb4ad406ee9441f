#include "aslab/checkpoint.hpp"

#include <cstring>

#include "aslab/error.hpp"
#include "file_io.hpp"
#include "json.hpp"

namespace aslab {
namespace {

using nlohmann::json;

json spec_json(const NetworkSpec& spec) {
  json layers = json::array();
  for (const LayerSpec& l : spec.layers) {
    if (const auto* c = std::get_if<Conv2DSpec>(&l)) {
      layers.push_back({{"type", "conv2d"}, {"f", c->f}, {"cin", c->cin}, {"cout", c->cout},
                        {"pad", c->pad}});
    } else if (std::holds_alternative<ReluSpec>(l)) {
      layers.push_back({{"type", "relu"}});
    } else if (std::holds_alternative<GapSpec>(l)) {
      layers.push_back({{"type", "gap"}});
    } else {
      const auto& d = std::get<DenseSpec>(l);
      layers.push_back({{"type", "dense"}, {"cin", d.cin}, {"cout", d.cout}});
    }
  }
  return {{"layers", layers},
          {"input", {spec.input.channels, spec.input.height, spec.input.width}},
          {"num_classes", spec.num_classes}};
}

NetworkSpec spec_from(const json& j) {
  NetworkSpec s;
  const auto& in = j.at("input");
  if (!in.is_array() || in.size() != 3) throw FormatError("checkpoint: input must be [C,H,W]");
  s.input = {in[0].get<std::size_t>(), in[1].get<std::size_t>(), in[2].get<std::size_t>()};
  s.num_classes = j.at("num_classes").get<std::size_t>();
  for (const json& l : j.at("layers")) {
    const std::string type = l.at("type").get<std::string>();
    if (type == "conv2d") {
      s.layers.push_back(Conv2DSpec{l.at("f").get<std::size_t>(), l.at("cin").get<std::size_t>(),
                                    l.at("cout").get<std::size_t>(), l.at("pad").get<int>()});
    } else if (type == "relu") {
      s.layers.push_back(ReluSpec{});
    } else if (type == "gap") {
      s.layers.push_back(GapSpec{});
    } else if (type == "dense") {
      s.layers.push_back(
          DenseSpec{l.at("cin").get<std::size_t>(), l.at("cout").get<std::size_t>()});
    } else {
      throw FormatError("checkpoint: unknown layer type '" + type + "'");
    }
  }
  return s;
}

}  // namespace

std::string spec_to_json(const NetworkSpec& spec) { return spec_json(spec).dump(); }

NetworkSpec spec_from_json(const std::string& text) {
  try {
    return spec_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("network spec: ") + e.what());
  }
}

Checkpoint make_checkpoint(const Model& model, const TrainConfig& cfg) {
  return {model.spec(), model.params(), {cfg.seed, cfg.epochs, to_string(cfg.perturb)}};
}

Model to_model(const Checkpoint& ckpt) {
  Model m(ckpt.spec);
  m.set_params(ckpt.params);
  return m;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  validate(ckpt.spec);
  const std::vector<Shape> shapes = parameter_shapes(ckpt.spec);
  if (shapes.size() != ckpt.params.size()) {
    throw ShapeError("checkpoint: spec declares " + std::to_string(shapes.size()) +
                     " parameter tensors, got " + std::to_string(ckpt.params.size()));
  }
  json params = json::array();
  const std::vector<std::string> names = parameter_names(ckpt.spec);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (ckpt.params[i].shape() != shapes[i]) {
      throw ShapeError("checkpoint: parameter " + names[i] + " has shape " +
                       shape_to_string(ckpt.params[i].shape()) + ", spec requires " +
                       shape_to_string(shapes[i]));
    }
    params.push_back({{"name", names[i]}, {"shape", shapes[i]}});
  }
  const json header = {{"spec", spec_json(ckpt.spec)},
                       {"params", params},
                       {"metadata",
                        {{"seed", ckpt.metadata.seed},
                         {"epochs", ckpt.metadata.epochs},
                         {"perturb", ckpt.metadata.perturb}}}};
  const std::string text = header.dump();
  std::vector<std::uint8_t> out{'A', 'S', 'L', 'C'};
  detail::put_u16le(out, kCheckpointVersion);
  detail::put_u32le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const Tensor& p : ckpt.params) detail::put_f32le(out, p.data(), p.size());
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "ASLC", 4) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  if (bytes.size() < 10) {
    throw FormatError("checkpoint: truncated: expected at least 10 bytes, got " +
                      std::to_string(bytes.size()));
  }
  const std::uint16_t version = detail::get_u16le(bytes.data() + 4);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::size_t hlen = detail::get_u32le(bytes.data() + 6);
  if (bytes.size() < 10 + hlen) {
    throw FormatError("checkpoint: truncated: header needs " + std::to_string(10 + hlen) +
                      " bytes, file has " + std::to_string(bytes.size()));
  }
  Checkpoint ck;
  std::vector<Shape> declared;
  try {
    const json header =
        json::parse(bytes.begin() + 10, bytes.begin() + 10 + static_cast<std::ptrdiff_t>(hlen));
    ck.spec = spec_from(header.at("spec"));
    for (const json& p : header.at("params")) declared.push_back(p.at("shape").get<Shape>());
    const json& meta = header.at("metadata");
    ck.metadata = {meta.at("seed").get<std::uint64_t>(), meta.at("epochs").get<std::size_t>(),
                   meta.at("perturb").get<std::string>()};
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
  }
  try {
    validate(ck.spec);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  const std::vector<Shape> shapes = parameter_shapes(ck.spec);
  if (declared != shapes) {
    throw FormatError("checkpoint: shape mismatch between parameter list and layer spec");
  }
  std::size_t expected = 10 + hlen;
  for (const Shape& s : shapes) expected += 4 * shape_volume(s);
  if (bytes.size() != expected) {
    throw FormatError(std::string("checkpoint: ") +
                      (bytes.size() < expected ? "truncated" : "trailing data") +
                      ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  std::size_t off = 10 + hlen;
  for (const Shape& s : shapes) {
    Tensor t(s);
    detail::get_f32le(bytes.data() + off, t.data(), t.size());
    off += 4 * t.size();
    ck.params.push_back(std::move(t));
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  detail::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(detail::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace aslab
