#pragma once

// File formats: FMAP float stacks, binary PGM label masks and heatmaps.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aslab/data.hpp"
#include "aslab/tensor.hpp"

namespace aslab {

inline constexpr std::uint16_t kFmapVersion = 1;

/// "FMAP" | u16 LE version | u8 dtype (0 = f32 LE) | u8 ndim | ndim x u32 LE dims |
/// row-major payload.
std::vector<std::uint8_t> encode_fmap(const Tensor& t);
/// Rejects bad magic, version, dtype, size mismatches and non-finite values
/// (naming the flat element index).
Tensor decode_fmap(const std::vector<std::uint8_t>& bytes);

void write_fmap(const Tensor& t, const std::filesystem::path& path);
Tensor read_fmap(const std::filesystem::path& path);

/// P5 PGM with maxval 255; gray level = class id.
void write_mask_pgm(const LabelMask& mask, const std::filesystem::path& path);
LabelMask read_mask_pgm(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const LabelMask& mask);
LabelMask decode_pgm(const std::vector<std::uint8_t>& bytes);

/// Gray level floor(v*255 + 0.5) of a value clamped to [0,1].
std::uint8_t heat_level(float v);

}  // namespace aslab
