#include "eif/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eif/compute/adam.hpp"
#include "eif/compute/ops.hpp"
#include "eif/compute/rng.hpp"
#include "eif/compute/tape.hpp"
#include "eif/data/io.hpp"
#include "eif/data/split.hpp"
#include "eif/data/windows.hpp"

namespace eif {
namespace {

// Converts a normalized [B, F, N, C] forecast to raw units for the entities of
// `segment`.
std::vector<double> denormalize(const Tensor& pred, const NormStats& stats, const Dataset& segment) {
  const std::size_t b = pred.dim(0), f = pred.dim(1), n = pred.dim(2), c = pred.dim(3);
  std::vector<NormStats::Scale> scales(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) scales[i * c + ch] = stats.scale(segment.entity_ids[i], ch);
  }
  auto src = pred.data();
  std::vector<double> out(src.size());
  for (std::size_t k = 0; k < b * f; ++k) {
    for (std::size_t j = 0; j < n * c; ++j) {
      const std::size_t idx = k * n * c + j;
      out[idx] = src[idx] * scales[j].std + scales[j].mean;
    }
  }
  return out;
}

std::vector<std::size_t> range_indices(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx;
  for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
  return idx;
}

std::string parameter_norms(const ForecastModel& model) {
  std::ostringstream os;
  bool first = true;
  for (const auto& p : model.parameters()) {
    double s = 0.0;
    for (double v : p.tensor().data()) s += v * v;
    os << (first ? "" : ", ") << p.name() << '=' << std::sqrt(s);
    first = false;
  }
  return os.str();
}

}  // namespace

const char* norm_fit_name(NormFit f) {
  return f == NormFit::kAfterScenario ? "fit-after-scenario" : "fit-before-scenario";
}

NormFit parse_norm_fit(const std::string& s) {
  if (s == "fit-after-scenario" || s == "after") return NormFit::kAfterScenario;
  if (s == "fit-before-scenario" || s == "before") return NormFit::kBeforeScenario;
  throw ConfigError("unknown normalization order '" + s + "' (expected after or before)");
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a non-negative number");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (train_stride < 1) throw ConfigError("train_stride must be >= 1");
  if (val_stride < 1) throw ConfigError("val_stride must be >= 1");
  scenario.validate();
  if (model.arch != Arch::kFeatMlp || model.featmlp_entities > 0) model.validate();
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed},
          {"grad_clip", c.grad_clip},
          {"train_stride", c.train_stride},
          {"val_stride", c.val_stride},
          {"scenario", to_json(c.scenario)},
          {"normalization", norm_fit_name(c.norm_fit)},
          {"model", to_json(c.model)},
          {"data_path", c.data_path}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.train_stride = j.value("train_stride", c.train_stride);
    c.val_stride = j.value("val_stride", c.val_stride);
    c.data_path = j.value("data_path", c.data_path);
    if (j.contains("normalization")) c.norm_fit = parse_norm_fit(j.at("normalization").get<std::string>());
    if (j.contains("scenario")) {
      nlohmann::json s = to_json(c.scenario);
      s.update(j.at("scenario"));
      c.scenario = scenario_from_json(s);
    }
    if (j.contains("model")) {
      nlohmann::json m = to_json(c.model);
      m.update(j.at("model"));
      const Arch arch = parse_arch(m.at("arch").get<std::string>());
      if (arch == Arch::kFeatMlp && m.value("featmlp_entities", 0) == 0) {
        // Resolved from the training data later.
        m["arch"] = "eiformer";
        c.model = model_config_from_json(m);
        c.model.arch = Arch::kFeatMlp;
      } else {
        c.model = model_config_from_json(m);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Experiment prepare_experiment(const Dataset& full, const ModelConfig& model,
                              const ScenarioSpec& scenario, NormFit norm_fit) {
  const ChronoSplit split =
      chrono_split(full, kDefaultSplitRatios, model.history_len + model.forecast_len);
  Experiment ex;
  ex.scenario = apply_scenario(split.train, split.test, scenario);
  ex.train_raw = ex.scenario.train;
  ex.val_raw = hide_entities(split.val, ex.scenario.new_ids, scenario.fill);
  ex.test_raw = ex.scenario.test;
  // Zero-filled entities never produced data during training, so they get
  // pooled statistics instead of a degenerate fit on zeros.
  const std::vector<std::string> exclude =
      scenario.fill == ScenarioFill::kZero ? ex.scenario.new_ids : std::vector<std::string>{};
  ex.norm_fit = norm_fit;
  ex.stats = norm_fit == NormFit::kAfterScenario ? NormStats::fit(ex.train_raw, exclude)
                                                 : NormStats::fit(split.train);
  ex.train = ex.stats.apply(ex.train_raw);
  ex.val = ex.stats.apply(ex.val_raw);
  ex.test = ex.stats.apply(ex.test_raw);
  return ex;
}

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"val_mae", r.val_mae},
          {"best_val_mae", r.best_val_mae},
          {"improved", r.improved}};
}

std::string training_log_jsonl(const std::vector<EpochRecord>& log) {
  std::string out;
  for (const auto& r : log) out += to_json(r).dump() + "\n";
  return out;
}

double segment_mae(const ForecastModel& model, const NormStats& stats, const Dataset& normalized,
                   const Dataset& raw, std::size_t stride, std::size_t batch_size) {
  const auto& cfg = model.config();
  WindowSet norm_w(normalized, cfg.history_len, cfg.forecast_len, stride);
  WindowSet raw_w(raw, cfg.history_len, cfg.forecast_len, stride);
  if (norm_w.empty()) throw SplitError("segment too short for a single window");
  CompensatedSum total;
  std::size_t count = 0;
  for (std::size_t begin = 0; begin < norm_w.size(); begin += batch_size) {
    const auto idx = range_indices(begin, std::min(norm_w.size(), begin + batch_size));
    WindowBatch in = norm_w.batch(idx);
    WindowBatch tgt = raw_w.batch(idx);
    const auto pred = denormalize(model.forward(in.inputs), stats, raw);
    const auto t = tgt.targets.data();
    for (std::size_t i = 0; i < pred.size(); ++i) total.add(std::fabs(pred[i] - t[i]));
    count += pred.size();
  }
  return total.value() / static_cast<double>(count);
}

TrainResult train(const TrainConfig& cfg_in, const Experiment& ex) {
  TrainConfig cfg = cfg_in;
  if (cfg.model.arch == Arch::kFeatMlp && cfg.model.featmlp_entities == 0) {
    cfg.model.featmlp_entities = ex.train.entities;
  }
  cfg.validate();
  cfg.model.validate();
  if (ex.train.channels != cfg.model.channels) {
    throw ConfigError("model channels do not match the dataset");
  }

  ForecastModel model(cfg.model);
  AdamState opt;
  opt.lr = cfg.lr;
  Rng order_rng(derive_seed(cfg.seed, 1));
  WindowSet train_w(ex.train, cfg.model.history_len, cfg.model.forecast_len, cfg.train_stride);
  if (train_w.empty()) throw SplitError("training segment too short for a single window");

  std::vector<EpochRecord> log;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t since_best = 0;
  auto best_params = model.snapshot();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto order = train_w.order(&order_rng);
    CompensatedSum loss_sum;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      WindowBatch wb =
          train_w.batch(std::span<const std::size_t>(order.data() + begin, end - begin));
      auto abort = [&](const std::string& what) {
        return NumericAbort(what + " at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches + 1) +
                            "; parameter norms: " + parameter_norms(model));
      };
      Tape tape;
      double loss_value = 0.0;
      {
        TapeScope scope(tape);
        Tensor loss;
        try {
          loss = ops::mae_loss(model.forward(wb.inputs), wb.targets);
        } catch (const NumericAbort&) {
          throw;
        } catch (const NumericError& e) {
          throw abort(e.what());
        }
        loss_value = loss.item();
        if (!std::isfinite(loss_value)) throw abort("non-finite training loss");
        tape.backward(loss);
      }
      if (cfg.grad_clip > 0.0) clip_grad_norm(model.parameters(), cfg.grad_clip);
      adam_step(model.parameters(), opt);
      loss_sum.add(loss_value);
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum.value() / static_cast<double>(batches);
    try {
      rec.val_mae = segment_mae(model, ex.stats, ex.val, ex.val_raw, cfg.val_stride);
    } catch (const NumericError& e) {
      throw NumericAbort(std::string(e.what()) + " in validation at epoch " + std::to_string(epoch) +
                         "; parameter norms: " + parameter_norms(model));
    }
    if (!std::isfinite(rec.val_mae)) {
      throw NumericAbort("non-finite validation MAE at epoch " + std::to_string(epoch));
    }
    rec.improved = rec.val_mae < best;
    if (rec.improved) {
      best = rec.val_mae;
      best_epoch = epoch;
      best_params = model.snapshot();
      since_best = 0;
    } else {
      ++since_best;
    }
    rec.best_val_mae = best;
    log.push_back(rec);
    if (since_best >= cfg.patience) break;
  }
  model.restore(best_params);

  TrainingMetadata meta;
  meta.epochs_run = log.size();
  meta.best_epoch = best_epoch;
  meta.best_val_mae = best;
  meta.seed = cfg.seed;
  meta.scenario = cfg.scenario;
  meta.new_ids = ex.scenario.new_ids;
  meta.removed_ids = ex.scenario.removed_ids;
  meta.normalization = norm_fit_name(ex.norm_fit);
  return {Checkpoint{std::move(model), ex.stats, std::move(meta)}, std::move(log)};
}

TrainResult train(const TrainConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("data_path is required");
  const Dataset full = load_dataset(cfg.data_path);
  const Experiment ex = prepare_experiment(full, cfg.model, cfg.scenario, cfg.norm_fit);
  return train(cfg, ex);
}

MetricsReport evaluate_predictor(const PredictFn& predict, const NormStats& stats,
                                 const Dataset& test_raw, std::size_t history,
                                 std::size_t horizon, std::span<const std::size_t> horizons,
                                 std::size_t batch_size) {
  for (std::size_t h : horizons) {
    if (h < 1 || h > horizon) throw ConfigError("horizon exceeds forecast length");
  }
  const Dataset test_norm = stats.apply(test_raw);
  WindowSet norm_w(test_norm, history, horizon, 1);
  WindowSet raw_w(test_raw, history, horizon, 1);
  if (norm_w.empty()) throw SplitError("test segment too short for a single window");
  MetricsAccumulator acc(horizon);
  const std::size_t rest = test_raw.entities * test_raw.channels;
  for (std::size_t begin = 0; begin < norm_w.size(); begin += batch_size) {
    const auto idx = range_indices(begin, std::min(norm_w.size(), begin + batch_size));
    WindowBatch in = norm_w.batch(idx);
    WindowBatch tgt = raw_w.batch(idx);
    Tensor pred = predict(in.inputs);
    if (pred.shape() != tgt.targets.shape()) {
      throw ShapeError("predictor returned " + shape_string(pred.shape()) + ", expected " +
                       shape_string(tgt.targets.shape()));
    }
    const auto raw_pred = denormalize(pred, stats, test_raw);
    acc.add(raw_pred, tgt.targets.data(), idx.size(), rest);
  }
  return acc.finalize(horizons);
}

MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& test_raw,
                       std::span<const std::size_t> horizons) {
  const ModelConfig& cfg = ckpt.model.config();
  if (test_raw.channels != cfg.channels) {
    throw ContractError("checkpoint expects " + std::to_string(cfg.channels) +
                        " channels, test data has " + std::to_string(test_raw.channels));
  }
  if (cfg.arch == Arch::kFeatMlp && test_raw.entities != cfg.featmlp_entities) {
    throw InductivenessError("featmlp checkpoint mixes " + std::to_string(cfg.featmlp_entities) +
                             " entities but the test segment has " +
                             std::to_string(test_raw.entities));
  }
  MetricsReport rep = evaluate_predictor(
      [&](const Tensor& x) { return ckpt.model.forward(x); }, ckpt.stats, test_raw,
      cfg.history_len, cfg.forecast_len, horizons);
  rep.metadata = {{"arch", arch_name(cfg.arch)},
                  {"scenario", to_json(ckpt.meta.scenario)},
                  {"entities", test_raw.entities},
                  {"normalization", ckpt.meta.normalization}};
  return rep;
}

Dataset scenario_test_segment(const Dataset& full, const Checkpoint& ckpt) {
  const ModelConfig& cfg = ckpt.model.config();
  const ChronoSplit split =
      chrono_split(full, kDefaultSplitRatios, cfg.history_len + cfg.forecast_len);
  return apply_scenario(split.train, split.test, ckpt.meta.scenario).test;
}

}  // namespace eif
