#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eif/data/dataset.hpp"
#include "eif/data/normalize.hpp"
#include "eif/data/scenario.hpp"
#include "eif/errors.hpp"
#include "eif/model/config.hpp"
#include "eif/train/checkpoint.hpp"
#include "eif/train/metrics.hpp"

namespace eif {

// Whether normalization statistics are fitted on the training segment after
// the scenario hides entities (unseen entities then use pooled statistics) or
// before it.
enum class NormFit { kAfterScenario, kBeforeScenario };
const char* norm_fit_name(NormFit f);
NormFit parse_norm_fit(const std::string& s);  // ConfigError on unknown

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 30;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  double grad_clip = 5.0;  // <= 0 disables clipping
  std::size_t train_stride = 1;
  std::size_t val_stride = 1;
  ScenarioSpec scenario;
  NormFit norm_fit = NormFit::kAfterScenario;
  ModelConfig model;
  std::string data_path;

  void validate() const;  // ConfigError naming the field
};

nlohmann::json to_json(const TrainConfig& cfg);
// Missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

// Raised when the training loss stops being finite.
class NumericAbort : public NumericError {
 public:
  using NumericError::NumericError;
};

// Raw and normalized segments after the chronological split, the scenario
// transform and normalization (fitted on the transformed training segment).
struct Experiment {
  Dataset train_raw, val_raw, test_raw;
  Dataset train, val, test;  // normalized
  NormStats stats;
  ScenarioResult scenario;  // train/test members hold the raw transformed segments
  NormFit norm_fit = NormFit::kAfterScenario;
};

// 6:2:2 split, scenario transform (validation follows the training side),
// normalization fit.
Experiment prepare_experiment(const Dataset& full, const ModelConfig& model,
                              const ScenarioSpec& scenario,
                              NormFit norm_fit = NormFit::kAfterScenario);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_mae = 0.0;
  double best_val_mae = 0.0;
  bool improved = false;
};

nlohmann::json to_json(const EpochRecord& rec);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> log;
};

// Minimizes MAE on normalized values with Adam; evaluates validation MAE in
// raw units after every epoch and keeps the best parameters. Throws
// NumericAbort on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const Experiment& experiment);
// Loads cfg.data_path and runs the whole pipeline.
TrainResult train(const TrainConfig& cfg);

// Line-oriented JSON, one record per epoch.
std::string training_log_jsonl(const std::vector<EpochRecord>& log);

// [B, T, N, C] normalized history -> [B, F, N, C] normalized forecast.
using PredictFn = std::function<Tensor(const Tensor&)>;

// Dense stride-1 evaluation of `predict` over a raw test segment. Inputs are
// normalized with `stats`, predictions de-normalized before scoring.
MetricsReport evaluate_predictor(const PredictFn& predict, const NormStats& stats,
                                 const Dataset& test_raw, std::size_t history,
                                 std::size_t horizon, std::span<const std::size_t> horizons,
                                 std::size_t batch_size = 32);

// Throws InductivenessError for a featmlp checkpoint with a different entity
// count.
MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& test_raw,
                       std::span<const std::size_t> horizons);

// Recomputes the checkpoint's scenario-transformed test segment from the full
// dataset.
Dataset scenario_test_segment(const Dataset& full, const Checkpoint& ckpt);

// Overall MAE in raw units of a model over a normalized segment.
double segment_mae(const ForecastModel& model, const NormStats& stats, const Dataset& normalized,
                   const Dataset& raw, std::size_t stride, std::size_t batch_size = 32);

}  // namespace eif
