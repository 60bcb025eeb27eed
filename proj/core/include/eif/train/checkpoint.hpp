#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eif/data/normalize.hpp"
#include "eif/data/scenario.hpp"
#include "eif/model/model.hpp"

namespace eif {

inline constexpr const char* kCheckpointVersion = "eif-v1";

struct TrainingMetadata {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_mae = 0.0;
  std::uint64_t seed = 0;
  ScenarioSpec scenario;
  std::vector<std::string> new_ids;
  std::vector<std::string> removed_ids;
  // Normalization is fitted on the scenario-transformed training segment.
  std::string normalization = "fit-after-scenario";
};

nlohmann::json to_json(const TrainingMetadata& meta);
TrainingMetadata training_metadata_from_json(const nlohmann::json& j);

struct Checkpoint {
  ForecastModel model;
  NormStats stats;
  TrainingMetadata meta;
};

// Container: the 6-byte tag "eif-v1", a little-endian u64 header length, a
// JSON header (config, metadata, blob directory), then the float64 blobs in
// directory order, little-endian.
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws CheckpointError on a version mismatch, a malformed header or a
// truncated blob section.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eif
