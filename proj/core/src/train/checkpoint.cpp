#include "eif/train/checkpoint.hpp"

#include <cstring>

#include "eif/errors.hpp"
#include "eif/util/binary_io.hpp"

namespace eif {
namespace {

constexpr std::size_t kTagLen = 6;

struct BlobRef {
  std::string name;
  Shape shape;
  std::size_t offset = 0;  // in elements from the start of the blob section
  std::size_t count = 0;
};

}  // namespace

nlohmann::json to_json(const TrainingMetadata& m) {
  return {{"epochs_run", m.epochs_run},
          {"best_epoch", m.best_epoch},
          {"best_val_mae", m.best_val_mae},
          {"seed", m.seed},
          {"scenario", to_json(m.scenario)},
          {"new_ids", m.new_ids},
          {"removed_ids", m.removed_ids},
          {"normalization", m.normalization}};
}

TrainingMetadata training_metadata_from_json(const nlohmann::json& j) {
  TrainingMetadata m;
  m.epochs_run = j.at("epochs_run").get<std::size_t>();
  m.best_epoch = j.at("best_epoch").get<std::size_t>();
  m.best_val_mae = j.at("best_val_mae").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.scenario = scenario_from_json(j.at("scenario"));
  m.new_ids = j.at("new_ids").get<std::vector<std::string>>();
  m.removed_ids = j.at("removed_ids").get<std::vector<std::string>>();
  m.normalization = j.at("normalization").get<std::string>();
  return m;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string blobs;
  nlohmann::json dir = nlohmann::json::array();
  std::size_t offset = 0;
  auto add_blob = [&](const std::string& name, const Shape& shape, std::span<const double> data,
                      nlohmann::json extra) {
    nlohmann::json e = {{"name", name}, {"shape", shape}, {"offset", offset}, {"count", data.size()}};
    e.update(extra);
    dir.push_back(std::move(e));
    append_f64_le(blobs, data);
    offset += data.size();
  };
  for (const auto& p : ckpt.model.parameters()) {
    add_blob("param/" + p.name(), p.tensor().shape(), p.tensor().data(),
             {{"trainable", p.trainable()}});
  }
  const NormStats& s = ckpt.stats;
  add_blob("norm/means", {s.means().size()}, s.means(), nlohmann::json::object());
  add_blob("norm/stds", {s.stds().size()}, s.stds(), nlohmann::json::object());
  add_blob("norm/pooled_means", {s.pooled_means().size()}, s.pooled_means(),
           nlohmann::json::object());
  add_blob("norm/pooled_stds", {s.pooled_stds().size()}, s.pooled_stds(), nlohmann::json::object());

  nlohmann::json header = {{"version", kCheckpointVersion},
                           {"model", to_json(ckpt.model.config())},
                           {"training", to_json(ckpt.meta)},
                           {"norm", {{"entity_ids", s.entity_ids()}, {"channels", s.channels()}}},
                           {"blobs", dir}};
  const std::string text = header.dump();
  std::string out(kCheckpointVersion);
  append_u64_le(out, text.size());
  out += text;
  out += blobs;
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kTagLen + 8 || bytes.substr(0, kTagLen) != kCheckpointVersion) {
    throw CheckpointError("checkpoint: missing or unsupported version tag (expected eif-v1)");
  }
  const std::uint64_t header_len = decode_u64_le(bytes.substr(kTagLen, 8));
  if (header_len > bytes.size() - kTagLen - 8) throw CheckpointError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kTagLen + 8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: corrupted header: ") + e.what());
  }
  const std::string_view blobs = bytes.substr(kTagLen + 8 + header_len);
  try {
    if (header.at("version").get<std::string>() != kCheckpointVersion) {
      throw CheckpointError("checkpoint: header version mismatch");
    }
    std::vector<BlobRef> refs;
    std::size_t total = 0;
    for (const auto& e : header.at("blobs")) {
      BlobRef r{e.at("name").get<std::string>(), e.at("shape").get<Shape>(),
                e.at("offset").get<std::size_t>(), e.at("count").get<std::size_t>()};
      if (r.offset != total || r.count != shape_size(r.shape)) {
        throw CheckpointError("checkpoint: inconsistent blob directory at " + r.name);
      }
      total += r.count;
      refs.push_back(std::move(r));
    }
    if (blobs.size() != total * 8) {
      throw CheckpointError("checkpoint: blob section has " + std::to_string(blobs.size()) +
                            " bytes, expected " + std::to_string(total * 8));
    }
    auto blob_data = [&](const BlobRef& r) {
      return decode_f64_le(blobs.substr(r.offset * 8, r.count * 8));
    };

    ModelConfig config = model_config_from_json(header.at("model"));
    ForecastModel model(config);
    std::vector<double> means, stds, pooled_means, pooled_stds;
    std::size_t params_loaded = 0;
    for (const auto& r : refs) {
      if (r.name.rfind("param/", 0) == 0) {
        Parameter* p = model.find(r.name.substr(6));
        if (!p || p->tensor().shape() != r.shape) {
          throw CheckpointError("checkpoint: parameter " + r.name + " does not fit the model");
        }
        auto values = blob_data(r);
        std::copy(values.begin(), values.end(), p->tensor().mutable_data().begin());
        ++params_loaded;
      } else if (r.name == "norm/means") {
        means = blob_data(r);
      } else if (r.name == "norm/stds") {
        stds = blob_data(r);
      } else if (r.name == "norm/pooled_means") {
        pooled_means = blob_data(r);
      } else if (r.name == "norm/pooled_stds") {
        pooled_stds = blob_data(r);
      }
    }
    if (params_loaded != model.parameters().size()) {
      throw CheckpointError("checkpoint: missing parameters");
    }
    const auto& norm = header.at("norm");
    NormStats stats = NormStats::from_parts(
        norm.at("entity_ids").get<std::vector<std::string>>(), norm.at("channels").get<std::size_t>(),
        std::move(means), std::move(stds), std::move(pooled_means), std::move(pooled_stds));
    return Checkpoint{std::move(model), std::move(stats),
                      training_metadata_from_json(header.at("training"))};
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: corrupted header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  } catch (const ContractError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  } catch (const CorruptionError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    throw CheckpointError(e.what());
  }
  return decode_checkpoint(bytes);
}

}  // namespace eif
