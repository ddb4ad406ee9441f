#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aslab/model.hpp"
#include "aslab/train.hpp"

namespace aslab {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointMetadata {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::string perturb = "none";
};

/// "ASLC" | u16 LE version | u32 LE header length | JSON header (layers,
/// parameter shapes, metadata) | little-endian f32 parameter blobs in
/// declaration order.
struct Checkpoint {
  NetworkSpec spec;
  std::vector<Tensor> params;
  CheckpointMetadata metadata;
};

Checkpoint make_checkpoint(const Model& model, const TrainConfig& cfg);
Model to_model(const Checkpoint& ckpt);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError with "bad magic", "truncated" (expected vs actual size)
/// or shape-mismatch messages.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// NetworkSpec as a JSON document string and back.
std::string spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const std::string& text);

}  // namespace aslab
