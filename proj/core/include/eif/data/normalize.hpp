#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eif/data/dataset.hpp"

namespace eif {

// Per-entity, per-channel z-score statistics fitted on a training segment.
// Entities the statistics have never seen (withheld during training) use the
// pooled per-channel statistics of the fitted entities.
class NormStats {
 public:
  static constexpr double kStdFloor = 1e-8;

  struct Scale {
    double mean = 0.0;
    double std = 1.0;
  };

  NormStats() = default;

  // `exclude` lists entity ids that must not receive their own statistics.
  static NormStats fit(const Dataset& train, std::span<const std::string> exclude = {});
  static NormStats from_parts(std::vector<std::string> entity_ids, std::size_t channels,
                              std::vector<double> means, std::vector<double> stds,
                              std::vector<double> pooled_means, std::vector<double> pooled_stds);

  bool knows(const std::string& id) const { return index_.contains(id); }
  Scale scale(const std::string& id, std::size_t channel) const;

  Dataset apply(const Dataset& raw) const;
  Dataset invert(const Dataset& normalized) const;

  const std::vector<std::string>& entity_ids() const { return ids_; }
  std::size_t channels() const { return channels_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& stds() const { return stds_; }
  const std::vector<double>& pooled_means() const { return pooled_means_; }
  const std::vector<double>& pooled_stds() const { return pooled_stds_; }

 private:
  void build_index();

  std::vector<std::string> ids_;
  std::size_t channels_ = 0;
  std::vector<double> means_;  // [N][C]
  std::vector<double> stds_;
  std::vector<double> pooled_means_;  // [C]
  std::vector<double> pooled_stds_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline NormStats fit_normalizer(const Dataset& train) { return NormStats::fit(train); }

}  // namespace eif
