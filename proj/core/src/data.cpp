#include "aslab/data.hpp"

#include <string>

#include "aslab/error.hpp"
#include "file_io.hpp"

namespace aslab {

IdxFile load_idx(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path);
  if (bytes.size() < 4) {
    throw FormatError(path.string() + ": truncated IDX header (" + std::to_string(bytes.size()) +
                      " bytes)");
  }
  IdxFile f;
  f.magic = detail::get_u32be(bytes.data());
  std::size_t ndim = 0;
  if (f.magic == kIdxImagesMagic) {
    ndim = 3;
  } else if (f.magic == kIdxLabelsMagic) {
    ndim = 1;
  } else {
    throw FormatError(path.string() + ": bad IDX magic " + std::to_string(f.magic));
  }
  const std::size_t header = 4 + 4 * ndim;
  if (bytes.size() < header) {
    throw FormatError(path.string() + ": truncated IDX header: expected " +
                      std::to_string(header) + " bytes, got " + std::to_string(bytes.size()));
  }
  std::size_t volume = 1;
  for (std::size_t d = 0; d < ndim; ++d) {
    f.dims.push_back(detail::get_u32be(bytes.data() + 4 + 4 * d));
    volume *= f.dims.back();
  }
  if (bytes.size() - header != volume) {
    throw FormatError(path.string() + ": truncated IDX payload: expected " +
                      std::to_string(volume) + " bytes, got " +
                      std::to_string(bytes.size() - header));
  }
  f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return f;
}

std::vector<Tensor> load_idx_images(const std::filesystem::path& path) {
  const IdxFile f = load_idx(path);
  if (f.magic != kIdxImagesMagic) {
    throw FormatError(path.string() + ": expected an IDX image file (magic 2051)");
  }
  const std::size_t n = f.dims[0], rows = f.dims[1], cols = f.dims[2];
  std::vector<Tensor> images;
  images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor t({1, rows, cols});
    const std::uint8_t* src = f.payload.data() + i * rows * cols;
    for (std::size_t p = 0; p < rows * cols; ++p) t[p] = static_cast<float>(src[p]) / 255.0f;
    images.push_back(std::move(t));
  }
  return images;
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  IdxFile f = load_idx(path);
  if (f.magic != kIdxLabelsMagic) {
    throw FormatError(path.string() + ": expected an IDX label file (magic 2049)");
  }
  return std::move(f.payload);
}

Tensor upsample_nearest(const Tensor& image, std::size_t side) {
  if (image.rank() != 3 || side == 0) {
    throw ShapeError("upsample_nearest: expected [C,H,W] image and positive side");
  }
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out({c, side, side});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < side; ++i) {
      const std::size_t si = i * h / side;
      for (std::size_t j = 0; j < side; ++j) out.at(ch, i, j) = image.at(ch, si, j * w / side);
    }
  return out;
}

std::vector<SegSample> build_mnist_seg(const std::vector<Tensor>& images,
                                       const std::vector<std::uint8_t>& labels,
                                       std::size_t side) {
  if (images.size() != labels.size()) {
    throw ShapeError("build_mnist_seg: " + std::to_string(images.size()) + " images but " +
                     std::to_string(labels.size()) + " labels");
  }
  std::vector<SegSample> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor& src = images[i];
    if (src.rank() != 3 || src.dim(0) != 1 || src.dim(1) != 28 || src.dim(2) != 28) {
      throw ShapeError("build_mnist_seg: image " + std::to_string(i) + " has shape " +
                       shape_to_string(src.shape()) + ", expected [1,28,28]");
    }
    if (labels[i] > 9) {
      throw FormatError("build_mnist_seg: label " + std::to_string(labels[i]) + " at index " +
                        std::to_string(i) + " is not a digit");
    }
    SegSample s;
    s.digit = labels[i];
    s.image = upsample_nearest(src, side);
    s.mask = LabelMask(side, side);
    for (std::size_t p = 0; p < side * side; ++p)
      if (s.image[p] > 0.0f) s.mask.pixels[p] = s.class_id();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SegSample> load_mnist_seg(const std::filesystem::path& dir, bool train,
                                      std::size_t side, std::size_t count) {
  const std::string prefix = train ? "train" : "t10k";
  std::vector<Tensor> images = load_idx_images(dir / (prefix + "-images-idx3-ubyte"));
  std::vector<std::uint8_t> labels = load_idx_labels(dir / (prefix + "-labels-idx1-ubyte"));
  if (count > 0 && count < images.size()) {
    images.resize(count);
    labels.resize(count);
  }
  return build_mnist_seg(images, labels, side);
}

}  // namespace aslab
