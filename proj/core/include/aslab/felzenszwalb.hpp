#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "aslab/tensor.hpp"

namespace aslab {

struct FelzenszwalbParams {
  double k = 100.0;
  double sigma = 0.8;      // Gaussian pre-smoothing; 0 disables it
  std::size_t min_size = 20;
  int connectivity = 8;    // 4 or 8
};

struct SuperpixelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint32_t> ids;  // dense in [0, count), numbered in raster order of first pixel
  std::size_t count = 0;
  FelzenszwalbParams params;

  std::uint32_t at(std::size_t y, std::size_t x) const { return ids[y * width + x]; }
};

/// Graph-based segmentation of a [C,H,W] image: grid graph edges weighted by the
/// Euclidean distance between pixel vectors, processed in nondecreasing weight
/// order (stable), merging when w <= min(Int(A) + k/|A|, Int(B) + k/|B|); then
/// components smaller than min_size are merged along edges in the same order.
SuperpixelMap felzenszwalb(const Tensor& image, const FelzenszwalbParams& params = {});

/// Segment sizes indexed by id.
std::vector<std::size_t> segment_sizes(const SuperpixelMap& sp);

/// True if every segment is connected under the given connectivity.
bool segments_connected(const SuperpixelMap& sp, int connectivity);

}  // namespace aslab
