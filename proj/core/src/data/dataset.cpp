#include "eif/data/dataset.hpp"

#include <cmath>
#include <unordered_set>

#include "eif/errors.hpp"

namespace eif {

void Dataset::validate() const {
  if (steps < 1) throw ContractError("dataset must have at least one time step");
  if (values.size() != steps * entities * channels) {
    throw ContractError("dataset values length does not match [T, N, C]");
  }
  if (entity_ids.size() != entities) throw ContractError("dataset entity id count != N");
  if (channel_names.size() != channels) throw ContractError("dataset channel name count != C");
  std::unordered_set<std::string> seen;
  for (const auto& id : entity_ids) {
    if (!seen.insert(id).second) throw ContractError("duplicate entity id '" + id + "'");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ContractError("dataset contains non-finite values");
  }
}

std::optional<std::size_t> Dataset::entity_index(const std::string& id) const {
  for (std::size_t i = 0; i < entity_ids.size(); ++i) {
    if (entity_ids[i] == id) return i;
  }
  return std::nullopt;
}

Dataset Dataset::time_slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > steps) throw ContractError("time_slice out of range");
  Dataset out = *this;
  out.steps = end - begin;
  out.start_time = start_time + static_cast<std::int64_t>(begin) * step_seconds;
  const std::size_t row = entities * channels;
  out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(begin * row),
                    values.begin() + static_cast<std::ptrdiff_t>(end * row));
  return out;
}

Dataset Dataset::select_entities(std::span<const std::size_t> indices) const {
  Dataset out;
  out.steps = steps;
  out.entities = indices.size();
  out.channels = channels;
  out.channel_names = channel_names;
  out.start_time = start_time;
  out.step_seconds = step_seconds;
  out.values.resize(steps * indices.size() * channels);
  for (std::size_t i : indices) {
    if (i >= entities) throw ContractError("select_entities: index out of range");
    out.entity_ids.push_back(entity_ids[i]);
  }
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < indices.size(); ++j) {
      for (std::size_t c = 0; c < channels; ++c) out.at(t, j, c) = at(t, indices[j], c);
    }
  }
  return out;
}

Dataset Dataset::select_entities(std::span<const std::string> ids) const {
  std::vector<std::size_t> idx;
  idx.reserve(ids.size());
  for (const auto& id : ids) {
    auto i = entity_index(id);
    if (!i) throw ContractError("unknown entity id '" + id + "'");
    idx.push_back(*i);
  }
  return select_entities(idx);
}

Dataset make_dataset(std::size_t steps, std::size_t entities, std::size_t channels) {
  Dataset d;
  d.steps = steps;
  d.entities = entities;
  d.channels = channels;
  d.values.assign(steps * entities * channels, 0.0);
  for (std::size_t n = 0; n < entities; ++n) d.entity_ids.push_back("e" + std::to_string(n));
  for (std::size_t c = 0; c < channels; ++c) d.channel_names.push_back("c" + std::to_string(c));
  return d;
}

}  // namespace eif
