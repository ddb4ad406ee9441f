#include "aslab/formats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <string>

#include "aslab/error.hpp"
#include "file_io.hpp"

namespace aslab {

std::vector<std::uint8_t> encode_fmap(const Tensor& t) {
  if (t.rank() == 0 || t.rank() > 255) throw ShapeError("fmap: tensor rank must be 1..255");
  if (auto bad = t.first_non_finite()) {
    throw NumericError("fmap: non-finite value at element " + std::to_string(*bad));
  }
  std::vector<std::uint8_t> out{'F', 'M', 'A', 'P'};
  detail::put_u16le(out, kFmapVersion);
  out.push_back(0);
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) {
    if (d > 0xFFFFFFFFu) throw ShapeError("fmap: dimension exceeds u32");
    detail::put_u32le(out, static_cast<std::uint32_t>(d));
  }
  detail::put_f32le(out, t.data(), t.size());
  return out;
}

Tensor decode_fmap(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "FMAP", 4) != 0) {
    throw FormatError("fmap: bad magic");
  }
  const std::uint16_t version = detail::get_u16le(bytes.data() + 4);
  if (version != kFmapVersion) {
    throw FormatError("fmap: unsupported version " + std::to_string(version));
  }
  if (bytes[6] != 0) throw FormatError("fmap: unsupported dtype " + std::to_string(bytes[6]));
  const std::size_t ndim = bytes[7];
  if (ndim == 0) throw FormatError("fmap: zero dimensions");
  const std::size_t header = 8 + 4 * ndim;
  if (bytes.size() < header) {
    throw FormatError("fmap: truncated header: expected " + std::to_string(header) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  Shape shape;
  for (std::size_t d = 0; d < ndim; ++d)
    shape.push_back(detail::get_u32le(bytes.data() + 8 + 4 * d));
  const std::size_t n = shape_volume(shape);
  if (bytes.size() != header + 4 * n) {
    throw FormatError("fmap: payload size mismatch: expected " + std::to_string(header + 4 * n) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  Tensor t(shape);
  detail::get_f32le(bytes.data() + header, t.data(), n);
  if (auto bad = t.first_non_finite()) {
    throw FormatError("fmap: non-finite value at element " + std::to_string(*bad));
  }
  return t;
}

void write_fmap(const Tensor& t, const std::filesystem::path& path) {
  detail::write_file(path, encode_fmap(t));
}

Tensor read_fmap(const std::filesystem::path& path) {
  try {
    return decode_fmap(detail::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pgm(const LabelMask& mask) {
  if (mask.pixels.size() != mask.width * mask.height) {
    throw ShapeError("pgm: mask pixel count does not match its dimensions");
  }
  const std::string header =
      "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), mask.pixels.begin(), mask.pixels.end());
  return out;
}

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string pgm_token(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  for (;;) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    if (pos < b.size() && b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#')
    tok.push_back(static_cast<char>(b[pos++]));
  if (tok.empty()) throw FormatError("pgm: truncated header");
  return tok;
}

std::size_t pgm_number(const std::vector<std::uint8_t>& b, std::size_t& pos, const char* what) {
  const std::string tok = pgm_token(b, pos);
  for (char c : tok)
    if (c < '0' || c > '9')
      throw FormatError(std::string("pgm: invalid ") + what + " '" + tok + "'");
  return std::stoul(tok);
}

}  // namespace

LabelMask decode_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  if (pgm_token(bytes, pos) != "P5") throw FormatError("pgm: P5 required");
  const std::size_t w = pgm_number(bytes, pos, "width");
  const std::size_t h = pgm_number(bytes, pos, "height");
  const std::size_t maxval = pgm_number(bytes, pos, "maxval");
  if (maxval != 255) throw FormatError("pgm: maxval must be 255, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("pgm: truncated header");
  ++pos;
  if (bytes.size() - pos != w * h) {
    throw FormatError("pgm: expected " + std::to_string(w * h) + " pixel bytes, got " +
                      std::to_string(bytes.size() - pos));
  }
  LabelMask m(w, h);
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), m.pixels.begin());
  return m;
}

void write_mask_pgm(const LabelMask& mask, const std::filesystem::path& path) {
  detail::write_file(path, encode_pgm(mask));
}

LabelMask read_mask_pgm(const std::filesystem::path& path) {
  try {
    return decode_pgm(detail::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::uint8_t heat_level(float v) {
  const double c = std::min(1.0, std::max(0.0, static_cast<double>(v)));
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

}  // namespace aslab
