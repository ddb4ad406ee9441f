#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "aslab/tensor.hpp"

namespace aslab {

inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kIgnore = 255;

/// Per-pixel class ids, row-major. 0 is background, 255 is ignored.
struct LabelMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  LabelMask() = default;
  LabelMask(std::size_t w, std::size_t h, std::uint8_t fill = kBackground)
      : width(w), height(h), pixels(w * h, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  std::size_t size() const noexcept { return pixels.size(); }
  bool operator==(const LabelMask&) const = default;
};

/// One segmentation example: image in [0,1], mask with class = digit + 1.
struct SegSample {
  Tensor image;  // [1,H,W]
  LabelMask mask;
  std::uint8_t digit = 0;

  std::uint8_t class_id() const noexcept { return static_cast<std::uint8_t>(digit + 1); }
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Raw content of an unsigned-byte IDX file.
struct IdxFile {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;
};

/// Parses a big-endian IDX container holding unsigned bytes.
/// Throws FormatError on an unknown magic or a truncated payload.
IdxFile load_idx(const std::filesystem::path& path);

/// Images as [1,rows,cols] tensors scaled to [0,1].
std::vector<Tensor> load_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);

/// Nearest-neighbour resize: output (i,j) samples source
/// (floor(i*H/side), floor(j*W/side)).
Tensor upsample_nearest(const Tensor& image, std::size_t side);

/// Upsamples each image to side x side and marks class digit+1 wherever the
/// upsampled intensity is > 0.
std::vector<SegSample> build_mnist_seg(const std::vector<Tensor>& images,
                                       const std::vector<std::uint8_t>& labels,
                                       std::size_t side);

/// Loads `count` samples (0 = all) of the train or t10k split from a
/// directory holding the standard MNIST file names.
std::vector<SegSample> load_mnist_seg(const std::filesystem::path& dir, bool train,
                                      std::size_t side, std::size_t count = 0);

}  // namespace aslab
