#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "eif/data/synthetic.hpp"
#include "eif/train/trainer.hpp"

namespace eif::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitAllFailed = 5;

struct GenDataOptions {
  SyntheticConfig synth;
  std::string out;
};

struct ImportOptions {
  std::string input;
  std::string layout = "wide";
  std::string out;
};

struct TrainOptions {
  std::string config;  // optional JSON TrainConfig used as the base
  std::string data;
  std::string arch = "eiformer";
  int scenario = 0;
  double fraction = 0.10;
  std::uint64_t scenario_seed = 0;
  std::string fill = "drop";
  std::string normalization = "after";
  std::size_t history = 12;
  std::size_t horizon = 12;
  std::size_t blocks = 2;
  std::size_t dim = 32;
  std::size_t latents = 8;
  std::size_t hidden_mult = 2;
  bool instance_norm = false;
  double lr = 1e-4;
  std::size_t batch = 16;
  std::size_t epochs = 30;
  std::size_t patience = 10;
  double clip = 5.0;
  std::size_t train_stride = 1;
  std::size_t val_stride = 1;
  std::uint64_t seed = 0;
  std::string out;
};

struct EvalOptions {
  std::string ckpt;
  std::string data;
  std::string horizons = "3,6,12";
  std::string out;
};

struct BenchOptions {
  std::string archs = "eiformer,ivariate";
  std::size_t min_n = 1024;
  std::size_t max_n = 16384;
  std::size_t factor = 2;
  std::size_t repeats = 3;
  std::size_t budget_bytes = std::size_t{256} << 20;
  std::size_t history = 12;
  std::size_t horizon = 12;
  std::size_t dim = 32;
  std::size_t latents = 8;
  std::size_t blocks = 2;
  std::uint64_t seed = 0;
  std::string out;
};

struct CkaOptions {
  std::string ckpt_a;
  std::string ckpt_b;
  std::string data;
  std::size_t samples = 256;
  std::string out;
};

struct SweepOptions {
  std::string axis;
  std::string values;
  std::string base_config;
  std::string data;
  std::string out;
};

// Each returns a process exit code; library exceptions propagate to the
// caller, which maps them to codes.
int run_gen_data(const GenDataOptions& o);
int run_import_csv(const ImportOptions& o);
// `given` holds the long names of flags set on the command line or via the
// environment; with --config only those override the file.
int run_train(const TrainOptions& o, const std::set<std::string>& given);
int run_eval(const EvalOptions& o);
int run_bench(const BenchOptions& o);
int run_cka(const CkaOptions& o);
int run_sweep(const SweepOptions& o);

// Strictly parsed comma-separated positive integers; ConfigError otherwise.
std::vector<std::size_t> parse_size_list(const std::string& s, const char* flag);

}  // namespace eif::cli
