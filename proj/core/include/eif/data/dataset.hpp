#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eif {

// Observation cube [T][N][C], row-major, with entity and channel labels.
struct Dataset {
  std::size_t steps = 0;
  std::size_t entities = 0;
  std::size_t channels = 0;
  std::vector<double> values;
  std::vector<std::string> entity_ids;
  std::vector<std::string> channel_names;
  std::int64_t start_time = 0;  // unix seconds of step 0
  std::int64_t step_seconds = 1;

  std::size_t index(std::size_t t, std::size_t n, std::size_t c) const {
    return (t * entities + n) * channels + c;
  }
  double at(std::size_t t, std::size_t n, std::size_t c) const { return values[index(t, n, c)]; }
  double& at(std::size_t t, std::size_t n, std::size_t c) { return values[index(t, n, c)]; }

  // Throws ContractError when an invariant is broken (unique ids, T >= 1,
  // finite values, consistent sizes).
  void validate() const;

  std::optional<std::size_t> entity_index(const std::string& id) const;

  // Steps [begin, end).
  Dataset time_slice(std::size_t begin, std::size_t end) const;
  // Columns in the given order; values copied bitwise.
  Dataset select_entities(std::span<const std::size_t> indices) const;
  Dataset select_entities(std::span<const std::string> ids) const;
};

Dataset make_dataset(std::size_t steps, std::size_t entities, std::size_t channels);

}  // namespace eif
