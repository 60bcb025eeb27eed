#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace eif {

enum class Arch { kEiFormer, kIVariate, kLinear, kFeatMlp };

std::string_view arch_name(Arch arch);
// Throws ConfigError for unknown names.
Arch parse_arch(std::string_view name);

struct ModelConfig {
  Arch arch = Arch::kEiFormer;
  std::size_t history_len = 12;
  std::size_t forecast_len = 12;
  std::size_t channels = 1;
  std::size_t embed_dim = 32;
  std::size_t latent_count = 8;
  std::size_t num_blocks = 2;
  std::size_t hidden_mult = 2;
  std::uint64_t seed = 0;
  // Entity-mixing width of featmlp; ignored by the other architectures.
  std::size_t featmlp_entities = 0;
  // Standardize each entity's history window by its own mean and deviation
  // and restore that scale on the forecast. Adds no parameters.
  bool instance_norm = false;

  // Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Closed-form number of scalar parameters (trainable and frozen) for a config.
std::size_t expected_parameter_count(const ModelConfig& config);

}  // namespace eif
