#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eif/model/config.hpp"

namespace eif {

struct BenchConfig {
  std::vector<Arch> archs{Arch::kEiFormer, Arch::kIVariate};
  std::vector<std::size_t> entity_counts;  // strictly increasing
  std::size_t history_len = 12;
  std::size_t forecast_len = 12;
  std::size_t channels = 1;
  std::size_t embed_dim = 32;
  std::size_t latent_count = 8;
  std::size_t num_blocks = 2;
  std::size_t repeats = 3;
  std::size_t budget_bytes = std::size_t{256} << 20;  // attention-map budget
  std::uint64_t seed = 0;

  void validate() const;
};

// min, min*factor, ... while <= max.
std::vector<std::size_t> geometric_counts(std::size_t min_n, std::size_t max_n, std::size_t factor);

enum class BenchStatus { kOk, kOomGuard };
const char* bench_status_name(BenchStatus s);

struct BenchRecord {
  Arch arch = Arch::kEiFormer;
  std::size_t entities = 0;
  double median_seconds = 0.0;  // 0 when guarded
  std::size_t peak_bytes = 0;   // live tensor bytes above the pre-forward baseline
  BenchStatus status = BenchStatus::kOk;
  std::size_t attn_map_bytes = 0;  // one attention map for a single sample
};

struct SlopeFit {
  Arch arch = Arch::kEiFormer;
  std::optional<double> slope;  // empty when fewer than two ok records
  std::size_t points = 0;
  std::size_t min_n = 0, max_n = 0;
};

struct BenchReport {
  std::vector<BenchRecord> records;
  std::vector<SlopeFit> slopes;
};

// Per-arch single-sample forward timing, median over `repeats` after one
// warm-up. Runs whose predicted attention map exceeds the budget are recorded
// as oom-guard and never allocated.
BenchReport bench_forward(const BenchConfig& cfg);

// Least-squares slope of log(time) on log(N) over ok records within a factor
// of ten of the largest ok N.
SlopeFit fit_slope(Arch arch, const std::vector<BenchRecord>& records);
std::vector<SlopeFit> fit_slopes(const std::vector<BenchRecord>& records);

// Columns: arch,N,median_seconds,peak_bytes,status,attn_map_bytes.
std::string to_csv(const BenchReport& report);
BenchReport bench_report_from_csv(const std::string& csv);

std::string bench_plot_svg(const BenchReport& report);

}  // namespace eif
