#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace eif {

// Little-endian float64 encoding independent of host byte order.
void append_f64_le(std::string& out, std::span<const double> values);
void append_u64_le(std::string& out, std::uint64_t value);
std::vector<double> decode_f64_le(std::string_view bytes);
std::uint64_t decode_u64_le(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and renames, so readers never see a
// partially written artifact.
void write_file(const std::filesystem::path& path, std::string_view contents);

// FNV-1a 64-bit, used for artifact checksums in manifests.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace eif
