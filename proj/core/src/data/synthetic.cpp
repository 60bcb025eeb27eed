#include "eif/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "eif/compute/rng.hpp"
#include "eif/errors.hpp"

namespace eif {

void SyntheticConfig::validate() const {
  if (entities < 1) throw ConfigError("entities must be >= 1");
  if (clusters < 1 || clusters > entities) throw ConfigError("clusters must be in [1, entities]");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (!(season_period > 0.0)) throw ConfigError("season must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise must be non-negative");
  if (!(emerge_frac >= 0.0 && emerge_frac <= 0.5)) throw ConfigError("emerge-frac out of range");
  if (!(vanish_frac >= 0.0 && vanish_frac <= 0.5)) throw ConfigError("vanish-frac out of range");
  if (!(scale_min > 0.0 && scale_max >= scale_min)) throw ConfigError("scale range invalid");
  if (!(trend_sigma >= 0.0)) throw ConfigError("trend sigma must be non-negative");
}

SyntheticResult gen_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.entities, k = cfg.clusters, steps = cfg.steps;
  Rng rng(cfg.seed);

  // Phases are stratified so clusters are distinguishable.
  std::vector<double> phase(k);
  for (std::size_t c = 0; c < k; ++c) {
    phase[c] = 2.0 * std::numbers::pi * (static_cast<double>(c) + rng.uniform()) /
               static_cast<double>(k);
  }
  std::vector<double> signal(k * steps);
  for (std::size_t c = 0; c < k; ++c) {
    double trend = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      if (t > 0) trend += rng.normal(0.0, cfg.trend_sigma);
      const double season =
          std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / cfg.season_period + phase[c]);
      signal[c * steps + t] = season + trend;
    }
  }

  SyntheticResult res;
  res.cluster_of.resize(n);
  res.scales.resize(n);
  const double log_lo = std::log(cfg.scale_min), log_hi = std::log(cfg.scale_max);
  for (std::size_t i = 0; i < n; ++i) {
    res.cluster_of[i] = i % k;
    res.scales[i] = std::exp(rng.uniform(log_lo, log_hi));
  }

  Dataset& d = res.dataset;
  d.steps = steps;
  d.entities = n;
  d.channels = 1;
  d.channel_names = {"value"};
  d.step_seconds = cfg.step_seconds;
  d.values.resize(steps * n);
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "entity_%05zu", i);
    d.entity_ids.emplace_back(buf);
  }
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double clean = res.scales[i] * signal[res.cluster_of[i] * steps + t];
      d.at(t, i, 0) = clean + (cfg.noise_sigma > 0.0 ? rng.normal(0.0, cfg.noise_sigma) : 0.0);
    }
  }

  const auto n_emerge = static_cast<std::size_t>(std::llround(cfg.emerge_frac * n));
  const auto n_vanish = static_cast<std::size_t>(std::llround(cfg.vanish_frac * n));
  const std::size_t window_lo = static_cast<std::size_t>(std::ceil(0.6 * static_cast<double>(steps)));
  const std::size_t window_len = steps > window_lo ? steps - window_lo : 1;
  auto perm = rng.permutation(n);
  res.emerging.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_emerge));
  res.vanishing.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_emerge),
                       perm.begin() + static_cast<std::ptrdiff_t>(n_emerge + n_vanish));
  std::sort(res.emerging.begin(), res.emerging.end());
  std::sort(res.vanishing.begin(), res.vanishing.end());
  for (std::size_t i : res.emerging) {
    const std::size_t onset = std::min(steps - 1, window_lo + rng.below(window_len));
    res.onset.push_back(std::max<std::size_t>(onset, 1));
    for (std::size_t t = 0; t < res.onset.back(); ++t) d.at(t, i, 0) = 0.0;
  }
  for (std::size_t i : res.vanishing) {
    const std::size_t offset = std::min(steps - 1, window_lo + rng.below(window_len));
    res.offset.push_back(offset);
    for (std::size_t t = offset; t < steps; ++t) d.at(t, i, 0) = 0.0;
  }
  return res;
}

}  // namespace eif
