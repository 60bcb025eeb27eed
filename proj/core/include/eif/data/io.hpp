#pragma once

#include <cstddef>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "eif/data/dataset.hpp"

namespace eif {

// Directory layout: meta.json (shape, ids, timestamps, endianness tag) and
// values.f64 (little-endian float64, row-major [T][N][C]).
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
// Throws CorruptionError when meta and blob disagree.
Dataset load_dataset(const std::filesystem::path& dir);

enum class CsvLayout { kWide, kLong };

struct ImportReport {
  std::size_t rows = 0;
  std::size_t missing_count = 0;
  std::size_t steps = 0;
  std::size_t entities = 0;
  std::size_t channels = 0;
};

nlohmann::json to_json(const ImportReport& report);

struct ImportResult {
  Dataset dataset;
  ImportReport report;
};

// Wide: header "timestamp,<entity>,<entity>,..." with one channel. Long:
// header "timestamp,entity,channel,value". Timestamps are integer unix seconds
// or ISO-8601 "YYYY-MM-DD[T ]HH:MM[:SS]" (UTC). Missing cells become 0.0.
ImportResult import_csv(const std::filesystem::path& path, CsvLayout layout);

}  // namespace eif
