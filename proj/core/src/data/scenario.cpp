#include "eif/data/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "eif/compute/rng.hpp"
#include "eif/errors.hpp"

namespace eif {

void ScenarioSpec::validate() const {
  if (scenario < 0 || scenario > 3) throw ConfigError("scenario must be 0, 1, 2 or 3");
  if (!(fraction >= 0.0 && fraction <= 0.5)) throw ConfigError("scenario fraction out of range");
  if (scenario == 3 && 2.0 * fraction > 1.0) {
    throw ConfigError("scenario 3 needs disjoint subsets but 2 * fraction > 1");
  }
}

nlohmann::json to_json(const ScenarioSpec& s) {
  return {{"scenario", s.scenario},
          {"fraction", s.fraction},
          {"seed", s.seed},
          {"fill", s.fill == ScenarioFill::kDrop ? "drop" : "zero"}};
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  try {
    s.scenario = j.at("scenario").get<int>();
    s.fraction = j.at("fraction").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const std::string fill = j.value("fill", std::string("drop"));
    if (fill == "drop") {
      s.fill = ScenarioFill::kDrop;
    } else if (fill == "zero") {
      s.fill = ScenarioFill::kZero;
    } else {
      throw ConfigError("scenario fill must be 'drop' or 'zero'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario spec: ") + e.what());
  }
  s.validate();
  return s;
}

Dataset hide_entities(const Dataset& segment, const std::vector<std::string>& ids,
                      ScenarioFill fill) {
  const std::unordered_set<std::string> hidden(ids.begin(), ids.end());
  if (fill == ScenarioFill::kZero) {
    Dataset out = segment;
    for (std::size_t n = 0; n < out.entities; ++n) {
      if (!hidden.contains(out.entity_ids[n])) continue;
      for (std::size_t t = 0; t < out.steps; ++t) {
        for (std::size_t c = 0; c < out.channels; ++c) out.at(t, n, c) = 0.0;
      }
    }
    return out;
  }
  std::vector<std::size_t> keep;
  for (std::size_t n = 0; n < segment.entities; ++n) {
    if (!hidden.contains(segment.entity_ids[n])) keep.push_back(n);
  }
  return segment.select_entities(keep);
}

ScenarioResult apply_scenario(const Dataset& train, const Dataset& test, const ScenarioSpec& spec) {
  spec.validate();
  if (train.entity_ids != test.entity_ids) {
    throw ContractError("apply_scenario: train and test must share one entity universe");
  }
  ScenarioResult res;
  res.fill = spec.fill;
  if (spec.scenario == 0) {
    res.train = train;
    res.test = test;
    return res;
  }
  const std::size_t n = train.entities;
  const auto count = static_cast<std::size_t>(std::llround(spec.fraction * static_cast<double>(n)));
  const std::size_t needed = spec.scenario == 3 ? 2 * count : count;
  if (needed > n) throw ConfigError("scenario subsets exceed the entity count");

  Rng rng(spec.seed);
  const auto perm = rng.permutation(n);
  auto pick = [&](std::size_t begin, std::size_t len) {
    std::vector<std::size_t> idx(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                                 perm.begin() + static_cast<std::ptrdiff_t>(begin + len));
    std::sort(idx.begin(), idx.end());
    std::vector<std::string> ids;
    for (std::size_t i : idx) ids.push_back(train.entity_ids[i]);
    return ids;
  };
  if (spec.scenario == 1 || spec.scenario == 3) res.new_ids = pick(0, count);
  if (spec.scenario == 2) res.removed_ids = pick(0, count);
  if (spec.scenario == 3) res.removed_ids = pick(count, count);

  res.train = hide_entities(train, res.new_ids, spec.fill);
  res.test = hide_entities(test, res.removed_ids, spec.fill);
  return res;
}

}  // namespace eif
