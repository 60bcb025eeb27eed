#include "eif/util/binary_io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "eif/errors.hpp"

namespace eif {

void append_u64_le(std::string& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void append_f64_le(std::string& out, std::span<const double> values) {
  out.reserve(out.size() + values.size() * 8);
  for (double v : values) append_u64_le(out, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t decode_u64_le(std::string_view bytes) {
  if (bytes.size() < 8) throw CorruptionError("truncated 64-bit field");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)]);
  }
  return v;
}

std::vector<double> decode_f64_le(std::string_view bytes) {
  if (bytes.size() % 8 != 0) throw CorruptionError("float64 blob length is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<double>(decode_u64_le(bytes.substr(i * 8, 8)));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace eif
