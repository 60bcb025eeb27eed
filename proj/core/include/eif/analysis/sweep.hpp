#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "eif/data/dataset.hpp"
#include "eif/train/trainer.hpp"

namespace eif {

enum class SweepAxis { kLr, kLayers, kNeurons };

SweepAxis parse_sweep_axis(const std::string& s);  // ConfigError on unknown
const char* sweep_axis_name(SweepAxis a);

// Strict parse of a comma-separated value list; ConfigError naming the bad
// entry. Layers and neurons values must be positive integers.
std::vector<double> parse_sweep_values(SweepAxis axis, const std::string& list);

struct SweepRow {
  double value = 0.0;
  double val_mae = 0.0;
  double test_mae = 0.0;
  double wall_seconds = 0.0;
  std::size_t param_count = 0;
  std::string status = "ok";  // ok | failed
  std::string message;
};

// One seeded training run per value on the same prepared data, everything
// else held at `base`. A failing run is recorded and the sweep continues.
std::vector<SweepRow> sweep(const TrainConfig& base, SweepAxis axis,
                            const std::vector<double>& values, const Dataset& full);

// Columns: axis,value,val_mae,test_mae,wall_seconds,param_count,status,message.
std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows);

}  // namespace eif
