#include "eif/analysis/sweep.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "eif/errors.hpp"

namespace eif {
namespace {

TrainConfig apply_value(const TrainConfig& base, SweepAxis axis, double value) {
  TrainConfig cfg = base;
  switch (axis) {
    case SweepAxis::kLr:
      cfg.lr = value;
      break;
    case SweepAxis::kLayers:
      cfg.model.num_blocks = static_cast<std::size_t>(value);
      break;
    case SweepAxis::kNeurons:
      cfg.model.embed_dim = static_cast<std::size_t>(value);
      break;
  }
  return cfg;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

}  // namespace

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "lr") return SweepAxis::kLr;
  if (s == "layers") return SweepAxis::kLayers;
  if (s == "neurons") return SweepAxis::kNeurons;
  throw ConfigError("unknown sweep axis '" + s + "' (expected lr, layers or neurons)");
}

const char* sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::kLr:
      return "lr";
    case SweepAxis::kLayers:
      return "layers";
    case SweepAxis::kNeurons:
      return "neurons";
  }
  return "?";
}

std::vector<double> parse_sweep_values(SweepAxis axis, const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    std::size_t pos = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (item.empty() || pos != item.size() || !std::isfinite(v)) {
      throw ConfigError("malformed sweep value '" + item + "'");
    }
    if (axis == SweepAxis::kLr && !(v > 0.0)) throw ConfigError("lr values must be positive");
    if (axis != SweepAxis::kLr && (v < 1.0 || v != std::floor(v))) {
      throw ConfigError(std::string(sweep_axis_name(axis)) + " values must be positive integers");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("sweep values must not be empty");
  return out;
}

std::vector<SweepRow> sweep(const TrainConfig& base, SweepAxis axis,
                            const std::vector<double>& values, const Dataset& full) {
  if (values.empty()) throw ConfigError("sweep values must not be empty");
  // Splits depend only on history and horizon, which no axis changes.
  const Experiment ex = prepare_experiment(full, base.model, base.scenario, base.norm_fit);
  std::vector<SweepRow> rows;
  for (double value : values) {
    SweepRow row;
    row.value = value;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const TrainConfig cfg = apply_value(base, axis, value);
      TrainResult res = train(cfg, ex);
      const ForecastModel& model = res.checkpoint.model;
      row.param_count = model.parameter_count();
      row.val_mae = res.checkpoint.meta.best_val_mae;
      row.test_mae = segment_mae(model, ex.stats, ex.test, ex.test_raw, 1);
    } catch (const std::exception& e) {
      row.status = "failed";
      row.message = e.what();
    }
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::string out = "axis,value,val_mae,test_mae,wall_seconds,param_count,status,message\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.6f,%zu,", sweep_axis_name(axis), r.value,
                  r.val_mae, r.test_mae, r.wall_seconds, r.param_count);
    out += buf + r.status + "," + csv_field(r.message) + "\n";
  }
  return out;
}

}  // namespace eif
