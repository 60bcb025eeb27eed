#include "eif/model/config.hpp"

#include "eif/errors.hpp"

namespace eif {

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::kEiFormer:
      return "eiformer";
    case Arch::kIVariate:
      return "ivariate";
    case Arch::kLinear:
      return "linear";
    case Arch::kFeatMlp:
      return "featmlp";
  }
  return "unknown";
}

Arch parse_arch(std::string_view name) {
  if (name == "eiformer") return Arch::kEiFormer;
  if (name == "ivariate") return Arch::kIVariate;
  if (name == "linear") return Arch::kLinear;
  if (name == "featmlp") return Arch::kFeatMlp;
  throw ConfigError("arch: unknown architecture '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw ConfigError(std::string(field) + " must be >= 1");
  };
  require(history_len >= 1, "history_len");
  require(forecast_len >= 1, "forecast_len");
  require(channels >= 1, "channels");
  require(embed_dim >= 1, "embed_dim");
  require(latent_count >= 1, "latent_count");
  require(num_blocks >= 1, "num_blocks");
  require(hidden_mult >= 1, "hidden_mult");
  if (arch == Arch::kFeatMlp) require(featmlp_entities >= 1, "featmlp_entities");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"arch", arch_name(c.arch)},
          {"history_len", c.history_len},
          {"forecast_len", c.forecast_len},
          {"channels", c.channels},
          {"embed_dim", c.embed_dim},
          {"latent_count", c.latent_count},
          {"num_blocks", c.num_blocks},
          {"hidden_mult", c.hidden_mult},
          {"seed", c.seed},
          {"featmlp_entities", c.featmlp_entities},
          {"instance_norm", c.instance_norm}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.arch = parse_arch(j.at("arch").get<std::string>());
    c.history_len = j.at("history_len").get<std::size_t>();
    c.forecast_len = j.at("forecast_len").get<std::size_t>();
    c.channels = j.at("channels").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.latent_count = j.at("latent_count").get<std::size_t>();
    c.num_blocks = j.at("num_blocks").get<std::size_t>();
    c.hidden_mult = j.at("hidden_mult").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.featmlp_entities = j.value("featmlp_entities", std::size_t{0});
    c.instance_norm = j.value("instance_norm", false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::size_t expected_parameter_count(const ModelConfig& c) {
  c.validate();
  const std::size_t in = c.history_len * c.channels;
  const std::size_t out = c.forecast_len * c.channels;
  if (c.arch == Arch::kLinear) return in * out + out;

  const std::size_t d = c.embed_dim;
  const std::size_t m = c.latent_count;
  const std::size_t hidden = c.hidden_mult * d;
  const std::size_t norm = 2 * d;
  const std::size_t latent = d * d + 2 * m * d;
  const std::size_t mlp = d * hidden + hidden + hidden * d + d;
  std::size_t block = 0;
  switch (c.arch) {
    case Arch::kEiFormer:
      block = 3 * norm + 2 * latent + mlp;
      break;
    case Arch::kIVariate:
      block = 2 * norm + 3 * d * d + mlp;
      break;
    case Arch::kFeatMlp:
      block = 2 * norm + c.featmlp_entities * c.featmlp_entities + c.featmlp_entities + mlp;
      break;
    case Arch::kLinear:
      break;
  }
  return (in * d + d) + c.num_blocks * block + (d * out + out);
}

}  // namespace eif
