#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eif/data/dataset.hpp"

namespace eif {

// How entities hidden from a split are represented.
//   drop: the columns are removed (entity count changes).
//   zero: the columns stay but every value is 0.0, so fixed-width models keep
//         their slot layout and the entity looks like one that emerged or
//         vanished.
enum class ScenarioFill { kDrop, kZero };

struct ScenarioSpec {
  int scenario = 0;  // 0 unchanged, 1 new entities, 2 removed entities, 3 both
  double fraction = 0.10;
  std::uint64_t seed = 0;
  ScenarioFill fill = ScenarioFill::kDrop;

  void validate() const;  // ConfigError
  bool operator==(const ScenarioSpec&) const = default;
};

nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& j);

struct ScenarioResult {
  Dataset train;
  Dataset test;
  std::vector<std::string> new_ids;      // hidden from training, present at test
  std::vector<std::string> removed_ids;  // seen in training, absent at test
  ScenarioFill fill = ScenarioFill::kDrop;
};

// Scenario 1 withholds a seeded `fraction` of entities from train; scenario 2
// removes a seeded `fraction` of entities from test; scenario 3 does both on
// disjoint subsets. Retained series are copied bitwise.
ScenarioResult apply_scenario(const Dataset& train, const Dataset& test, const ScenarioSpec& spec);

// Applies the drop/zero rule for `ids` to another segment (e.g. validation
// gets the same treatment as train).
Dataset hide_entities(const Dataset& segment, const std::vector<std::string>& ids,
                      ScenarioFill fill);

}  // namespace eif
