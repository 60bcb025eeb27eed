#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "eif/data/dataset.hpp"

namespace eif {

struct SyntheticConfig {
  std::size_t entities = 100;
  std::size_t clusters = 5;
  std::size_t steps = 2000;
  double season_period = 24.0;
  double noise_sigma = 0.3;
  double emerge_frac = 0.0;
  double vanish_frac = 0.0;
  std::uint64_t seed = 0;
  // Per-entity amplitudes are log-uniform in [scale_min, scale_max].
  double scale_min = 0.25;
  double scale_max = 4.0;
  // Step deviation of each cluster's random-walk trend.
  double trend_sigma = 0.01;
  std::int64_t step_seconds = 300;

  void validate() const;  // ConfigError naming the field
};

struct SyntheticResult {
  Dataset dataset;
  std::vector<std::size_t> cluster_of;  // per entity
  std::vector<double> scales;
  std::vector<std::size_t> emerging;  // entity indices, ascending
  std::vector<std::size_t> vanishing;
  std::vector<std::size_t> onset;   // per emerging entity: first nonzero step
  std::vector<std::size_t> offset;  // per vanishing entity: first zero step
};

// Clustered seasonal series: cluster k follows sin(2 pi t / period + phase_k)
// plus a random-walk trend; entity i emits scale_i * signal + Gaussian noise.
// Emerging entities are zero before an onset in the last 40% of the series,
// vanishing entities are zero from an offset in the same range.
SyntheticResult gen_synthetic(const SyntheticConfig& config);

}  // namespace eif
