#include "eif/data/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "eif/errors.hpp"

namespace eif {

NormStats NormStats::fit(const Dataset& train, std::span<const std::string> exclude) {
  if (train.steps == 0) throw ContractError("fit_normalizer: empty training segment");
  std::unordered_set<std::string> skip(exclude.begin(), exclude.end());
  NormStats s;
  s.channels_ = train.channels;
  const double inv_t = 1.0 / static_cast<double>(train.steps);
  std::vector<double> pooled_mean_sum(train.channels, 0.0), pooled_std_sum(train.channels, 0.0);
  std::vector<std::size_t> mean_count(train.channels, 0), std_count(train.channels, 0);
  for (std::size_t n = 0; n < train.entities; ++n) {
    if (skip.contains(train.entity_ids[n])) continue;
    s.ids_.push_back(train.entity_ids[n]);
    for (std::size_t c = 0; c < train.channels; ++c) {
      double mean = 0.0;
      for (std::size_t t = 0; t < train.steps; ++t) mean += train.at(t, n, c);
      mean *= inv_t;
      double var = 0.0;
      for (std::size_t t = 0; t < train.steps; ++t) {
        const double dv = train.at(t, n, c) - mean;
        var += dv * dv;
      }
      const double std = std::sqrt(var * inv_t);
      s.means_.push_back(mean);
      s.stds_.push_back(std::max(std, kStdFloor));
      pooled_mean_sum[c] += mean;
      ++mean_count[c];
      if (std > kStdFloor) {
        pooled_std_sum[c] += std;
        ++std_count[c];
      }
    }
  }
  for (std::size_t c = 0; c < train.channels; ++c) {
    s.pooled_means_.push_back(mean_count[c] ? pooled_mean_sum[c] / mean_count[c] : 0.0);
    s.pooled_stds_.push_back(std_count[c] ? pooled_std_sum[c] / std_count[c] : 1.0);
  }
  s.build_index();
  return s;
}

NormStats NormStats::from_parts(std::vector<std::string> entity_ids, std::size_t channels,
                                std::vector<double> means, std::vector<double> stds,
                                std::vector<double> pooled_means,
                                std::vector<double> pooled_stds) {
  if (means.size() != entity_ids.size() * channels || stds.size() != means.size() ||
      pooled_means.size() != channels || pooled_stds.size() != channels) {
    throw ContractError("normalization statistics have inconsistent sizes");
  }
  NormStats s;
  s.ids_ = std::move(entity_ids);
  s.channels_ = channels;
  s.means_ = std::move(means);
  s.stds_ = std::move(stds);
  s.pooled_means_ = std::move(pooled_means);
  s.pooled_stds_ = std::move(pooled_stds);
  s.build_index();
  return s;
}

void NormStats::build_index() {
  index_.clear();
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

NormStats::Scale NormStats::scale(const std::string& id, std::size_t channel) const {
  if (channel >= channels_) throw ContractError("normalizer: channel out of range");
  auto it = index_.find(id);
  if (it == index_.end()) return {pooled_means_[channel], pooled_stds_[channel]};
  const std::size_t k = it->second * channels_ + channel;
  return {means_[k], stds_[k]};
}

Dataset NormStats::apply(const Dataset& raw) const {
  if (raw.channels != channels_) throw ContractError("normalizer: channel count mismatch");
  Dataset out = raw;
  for (std::size_t n = 0; n < raw.entities; ++n) {
    for (std::size_t c = 0; c < raw.channels; ++c) {
      const Scale sc = scale(raw.entity_ids[n], c);
      for (std::size_t t = 0; t < raw.steps; ++t) {
        out.at(t, n, c) = (raw.at(t, n, c) - sc.mean) / sc.std;
      }
    }
  }
  return out;
}

Dataset NormStats::invert(const Dataset& normalized) const {
  if (normalized.channels != channels_) throw ContractError("normalizer: channel count mismatch");
  Dataset out = normalized;
  for (std::size_t n = 0; n < normalized.entities; ++n) {
    for (std::size_t c = 0; c < normalized.channels; ++c) {
      const Scale sc = scale(normalized.entity_ids[n], c);
      for (std::size_t t = 0; t < normalized.steps; ++t) {
        out.at(t, n, c) = normalized.at(t, n, c) * sc.std + sc.mean;
      }
    }
  }
  return out;
}

}  // namespace eif
