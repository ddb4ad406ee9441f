#include "file_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "aslab/error.hpp"

namespace aslab::detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read error on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write error on " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write error on " + path.string());
}

void put_f32le(std::vector<std::uint8_t>& out, const float* v, std::size_t n) {
  const std::size_t start = out.size();
  out.resize(start + 4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(v[i]);
    for (int b = 0; b < 4; ++b) out[start + 4 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
}

void get_f32le(const std::uint8_t* p, float* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = std::bit_cast<float>(get_u32le(p + 4 * i));
}

}  // namespace aslab::detail
