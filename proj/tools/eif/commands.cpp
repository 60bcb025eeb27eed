#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "eif/analysis/bench.hpp"
#include "eif/analysis/cka.hpp"
#include "eif/analysis/sweep.hpp"
#include "eif/data/io.hpp"
#include "eif/data/split.hpp"
#include "eif/data/windows.hpp"
#include "eif/errors.hpp"
#include "eif/util/binary_io.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;

namespace eif::cli {
namespace {

void require_out(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  fs::create_directories(out);
}

nlohmann::json read_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<Arch> parse_arch_list(const std::string& s) {
  std::vector<Arch> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_arch(item));
  if (out.empty()) throw ConfigError("--archs must name at least one architecture");
  return out;
}

ScenarioFill parse_fill(const std::string& s) {
  if (s == "drop") return ScenarioFill::kDrop;
  if (s == "zero") return ScenarioFill::kZero;
  throw ConfigError("--fill must be drop or zero");
}

TrainConfig resolve_train_config(const TrainOptions& o, const std::set<std::string>& given) {
  TrainConfig cfg;
  const bool from_file = !o.config.empty();
  if (from_file) cfg = train_config_from_json(read_json_file(o.config));
  auto use = [&](const char* name) { return !from_file || given.contains(name); };
  if (use("data")) cfg.data_path = o.data;
  if (use("arch")) cfg.model.arch = parse_arch(o.arch);
  if (use("scenario")) cfg.scenario.scenario = o.scenario;
  if (use("fraction")) cfg.scenario.fraction = o.fraction;
  if (use("scenario-seed")) cfg.scenario.seed = o.scenario_seed;
  if (use("fill")) cfg.scenario.fill = parse_fill(o.fill);
  if (use("normalization")) cfg.norm_fit = parse_norm_fit(o.normalization);
  if (use("history")) cfg.model.history_len = o.history;
  if (use("horizon")) cfg.model.forecast_len = o.horizon;
  if (use("blocks")) cfg.model.num_blocks = o.blocks;
  if (use("dim")) cfg.model.embed_dim = o.dim;
  if (use("latents")) cfg.model.latent_count = o.latents;
  if (use("hidden-mult")) cfg.model.hidden_mult = o.hidden_mult;
  if (use("instance-norm")) cfg.model.instance_norm = o.instance_norm;
  if (use("lr")) cfg.lr = o.lr;
  if (use("batch")) cfg.batch_size = o.batch;
  if (use("epochs")) cfg.max_epochs = o.epochs;
  if (use("patience")) cfg.patience = o.patience;
  if (use("clip")) cfg.grad_clip = o.clip;
  if (use("train-stride")) cfg.train_stride = o.train_stride;
  if (use("val-stride")) cfg.val_stride = o.val_stride;
  if (use("seed")) cfg.seed = o.seed;
  // The model seed follows the run seed so one flag pins the whole run.
  if (use("seed")) cfg.model.seed = o.seed;
  if (cfg.data_path.empty()) throw ConfigError("--data is required");
  if (!(cfg.lr > 0.0)) throw ConfigError("--lr must be positive");
  cfg.validate();
  return cfg;
}

// Dataset loading failures are I/O problems, not validation ones.
Dataset load_data(const std::string& path) {
  if (path.empty()) throw ConfigError("--data is required");
  return load_dataset(path);
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& s, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (item.empty() || pos != item.size() || item[0] == '-' || v == 0) {
      throw ConfigError(std::string(flag) + ": malformed value '" + item + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError(std::string(flag) + " must not be empty");
  return out;
}

int run_gen_data(const GenDataOptions& o) {
  o.synth.validate();
  require_out(o.out);
  Manifest manifest("gen-data");
  const SyntheticResult res = gen_synthetic(o.synth);
  save_dataset(res.dataset, o.out);
  manifest.set_seed(o.synth.seed);
  manifest.config() = {{"entities", o.synth.entities},
                       {"clusters", o.synth.clusters},
                       {"steps", o.synth.steps},
                       {"season", o.synth.season_period},
                       {"noise", o.synth.noise_sigma},
                       {"emerge_frac", o.synth.emerge_frac},
                       {"vanish_frac", o.synth.vanish_frac},
                       {"scale_min", o.synth.scale_min},
                       {"scale_max", o.synth.scale_max},
                       {"trend_sigma", o.synth.trend_sigma},
                       {"seed", o.synth.seed}};
  manifest.add_output(fs::path(o.out) / "meta.json");
  manifest.add_output(fs::path(o.out) / "values.f64");
  manifest.extra() = {{"emerging", res.emerging.size()}, {"vanishing", res.vanishing.size()}};
  manifest.write(o.out);
  std::printf("T=%zu N=%zu C=%zu emerging=%zu vanishing=%zu\n", res.dataset.steps,
              res.dataset.entities, res.dataset.channels, res.emerging.size(),
              res.vanishing.size());
  return kExitOk;
}

int run_import_csv(const ImportOptions& o) {
  CsvLayout layout;
  if (o.layout == "wide") {
    layout = CsvLayout::kWide;
  } else if (o.layout == "long") {
    layout = CsvLayout::kLong;
  } else {
    throw ConfigError("--layout must be wide or long");
  }
  if (o.input.empty()) throw ConfigError("--input is required");
  require_out(o.out);
  Manifest manifest("import-csv");
  const ImportResult res = import_csv(o.input, layout);
  save_dataset(res.dataset, o.out);
  manifest.config() = {{"input", o.input}, {"layout", o.layout}};
  manifest.add_input(o.input);
  manifest.add_output(fs::path(o.out) / "meta.json");
  manifest.add_output(fs::path(o.out) / "values.f64");
  manifest.extra() = to_json(res.report);
  manifest.write(o.out);
  std::cout << to_json(res.report).dump() << "\n";
  return kExitOk;
}

int run_train(const TrainOptions& o, const std::set<std::string>& given) {
  const TrainConfig cfg = resolve_train_config(o, given);
  require_out(o.out);
  Manifest manifest("train");
  const Dataset full = load_data(cfg.data_path);
  const Experiment ex = prepare_experiment(full, cfg.model, cfg.scenario, cfg.norm_fit);
  TrainResult res = train(cfg, ex);
  const fs::path out(o.out);
  save_checkpoint(res.checkpoint, out / "ckpt.eif");
  write_file(out / "log.jsonl", training_log_jsonl(res.log));

  nlohmann::json resolved = to_json(cfg);
  resolved["model"] = to_json(res.checkpoint.model.config());
  manifest.config() = resolved;
  manifest.set_seed(cfg.seed);
  manifest.add_input(cfg.data_path);
  manifest.add_output(out / "ckpt.eif");
  manifest.add_output(out / "log.jsonl");
  manifest.extra() = to_json(res.checkpoint.meta);
  manifest.write(out);
  const auto& meta = res.checkpoint.meta;
  std::printf("epochs=%zu best_epoch=%zu best_val_mae=%.6g train_entities=%zu\n", meta.epochs_run,
              meta.best_epoch, meta.best_val_mae, ex.train.entities);
  return kExitOk;
}

int run_eval(const EvalOptions& o) {
  if (o.ckpt.empty()) throw ConfigError("--ckpt is required");
  const std::vector<std::size_t> horizons = parse_size_list(o.horizons, "--horizons");
  require_out(o.out);
  Manifest manifest("eval");
  const Checkpoint ckpt = load_checkpoint(o.ckpt);
  const ModelConfig& mc = ckpt.model.config();
  for (std::size_t h : horizons) {
    if (h > mc.forecast_len) throw ConfigError("horizon exceeds forecast length");
  }
  const Dataset full = load_data(o.data);
  const Dataset test = scenario_test_segment(full, ckpt);
  MetricsReport report;
  bool warned = false;
  try {
    report = evaluate(ckpt, test, horizons);
  } catch (const InductivenessError& e) {
    // Expected for a position-bound model under a changed entity set.
    report.status = "inductiveness-error";
    report.message = e.what();
    report.metadata = {{"arch", arch_name(mc.arch)},
                       {"scenario", to_json(ckpt.meta.scenario)},
                       {"entities", test.entities}};
    warned = true;
  }
  const fs::path out(o.out);
  write_file(out / "metrics.json", to_json(report).dump(2) + "\n");
  if (warned) {
    write_file(out / "metrics.csv", "horizon,mae,rmse,mape,status\naverage,,,," + report.status + "\n");
  } else {
    write_file(out / "metrics.csv", to_csv(report));
  }
  manifest.config() = {{"ckpt", o.ckpt}, {"data", o.data}, {"horizons", horizons}};
  manifest.set_seed(ckpt.meta.seed);
  manifest.add_input(o.ckpt);
  manifest.add_input(o.data);
  manifest.add_output(out / "metrics.json");
  manifest.add_output(out / "metrics.csv");
  manifest.write(out);
  if (warned) {
    std::fprintf(stderr, "warning: %s\n", report.message.c_str());
  } else {
    std::printf("average mae=%.6g rmse=%.6g mape=%s\n", report.average.mae, report.average.rmse,
                report.average.mape_defined ? std::to_string(report.average.mape).c_str() : "undefined");
  }
  return kExitOk;
}

int run_bench(const BenchOptions& o) {
  BenchConfig cfg;
  cfg.archs = parse_arch_list(o.archs);
  cfg.entity_counts = geometric_counts(o.min_n, o.max_n, o.factor);
  cfg.repeats = o.repeats;
  cfg.budget_bytes = o.budget_bytes;
  cfg.history_len = o.history;
  cfg.forecast_len = o.horizon;
  cfg.embed_dim = o.dim;
  cfg.latent_count = o.latents;
  cfg.num_blocks = o.blocks;
  cfg.seed = o.seed;
  cfg.validate();
  require_out(o.out);
  Manifest manifest("bench");
  const BenchReport report = bench_forward(cfg);
  const fs::path out(o.out);
  write_file(out / "bench.csv", to_csv(report));
  write_file(out / "bench.svg", bench_plot_svg(report));
  nlohmann::json archs = nlohmann::json::array();
  for (Arch a : cfg.archs) archs.push_back(arch_name(a));
  manifest.config() = {{"archs", archs},
                       {"entity_counts", cfg.entity_counts},
                       {"repeats", cfg.repeats},
                       {"budget_bytes", cfg.budget_bytes},
                       {"history", cfg.history_len},
                       {"horizon", cfg.forecast_len},
                       {"dim", cfg.embed_dim},
                       {"latents", cfg.latent_count},
                       {"blocks", cfg.num_blocks},
                       {"seed", cfg.seed}};
  manifest.set_seed(cfg.seed);
  manifest.add_output(out / "bench.csv");
  manifest.add_output(out / "bench.svg");
  nlohmann::json slopes = nlohmann::json::object();
  for (const auto& s : report.slopes) {
    slopes[std::string(arch_name(s.arch))] =
        s.slope ? nlohmann::json(*s.slope) : nlohmann::json(nullptr);
    if (s.slope) {
      std::printf("%s slope=%.3f over N in [%zu, %zu]\n", std::string(arch_name(s.arch)).c_str(),
                  *s.slope, s.min_n, s.max_n);
    } else {
      std::printf("%s slope undefined\n", std::string(arch_name(s.arch)).c_str());
    }
  }
  manifest.extra() = {{"slopes", slopes}};
  manifest.write(out);
  return kExitOk;
}

int run_cka(const CkaOptions& o) {
  if (o.samples == 0) throw ConfigError("--samples must be >= 1");
  if (o.ckpt_a.empty()) throw ConfigError("--ckpt-a is required");
  require_out(o.out);
  Manifest manifest("cka");
  const Checkpoint a = load_checkpoint(o.ckpt_a);
  std::optional<Checkpoint> b;
  if (!o.ckpt_b.empty()) b.emplace(load_checkpoint(o.ckpt_b));
  const Dataset full = load_data(o.data);
  const ModelConfig& ma = a.model.config();
  if (b) {
    const ModelConfig& mb = b->model.config();
    if (mb.history_len != ma.history_len || mb.channels != ma.channels) {
      throw ContractError("checkpoints disagree on history length or channels");
    }
  }
  const ChronoSplit split = chrono_split(full, kDefaultSplitRatios, ma.history_len + ma.forecast_len);
  // Inputs are the first test windows; each model sees them through its own
  // normalization.
  auto inputs_for = [&](const Checkpoint& c) {
    const Dataset norm = c.stats.apply(split.test);
    WindowSet w(norm, ma.history_len, ma.forecast_len, 1);
    const std::size_t m = std::min(o.samples, w.size());
    if (m < 2) throw ContractError("test segment has fewer than two windows");
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    return w.batch(idx).inputs;
  };
  auto stack_for = [&](const Checkpoint& c) {
    try {
      return extract_representations(c.model, inputs_for(c));
    } catch (const InductivenessError& e) {
      throw ContractError(std::string("incompatible sample shape: ") + e.what());
    }
  };
  const RepStack sa = stack_for(a);
  const RepStack sb = b ? stack_for(*b) : sa;
  const CkaMatrix m = cka_matrix(sa, sb);
  const fs::path out(o.out);
  write_file(out / "cka.csv", to_csv(m));
  write_heatmap_pgm(m, out / "cka.pgm");
  manifest.config() = {{"ckpt_a", o.ckpt_a}, {"ckpt_b", o.ckpt_b}, {"data", o.data},
                       {"samples", o.samples}};
  manifest.add_input(o.ckpt_a);
  if (b) manifest.add_input(o.ckpt_b);
  manifest.add_input(o.data);
  manifest.add_output(out / "cka.csv");
  manifest.add_output(out / "cka.pgm");
  manifest.extra() = {{"samples_used", sa.samples},
                      {"split", "test"},
                      {"capture", "embedding and block outputs"},
                      {"flatten", "row-major [samples, N*D]"},
                      {"degenerate_pairs", m.degenerate_pairs}};
  manifest.write(out);
  std::printf("cka %zux%zu over %zu samples\n", m.scores.rows, m.scores.cols, sa.samples);
  return kExitOk;
}

int run_sweep(const SweepOptions& o) {
  const SweepAxis axis = parse_sweep_axis(o.axis);
  const std::vector<double> values = parse_sweep_values(axis, o.values);
  TrainConfig base;
  if (!o.base_config.empty()) base = train_config_from_json(read_json_file(o.base_config));
  if (!o.data.empty()) base.data_path = o.data;
  require_out(o.out);
  Manifest manifest("sweep");
  const Dataset full = load_data(base.data_path);
  const std::vector<SweepRow> rows = sweep(base, axis, values, full);
  const fs::path out(o.out);
  write_file(out / "sweep.csv", sweep_csv(axis, rows));
  manifest.config() = {{"axis", sweep_axis_name(axis)}, {"values", values}, {"base", to_json(base)}};
  manifest.set_seed(base.seed);
  manifest.add_input(base.data_path);
  manifest.add_output(out / "sweep.csv");
  manifest.write(out);
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (r.status != "ok") {
      ++failed;
      std::fprintf(stderr, "warning: %s=%g failed: %s\n", sweep_axis_name(axis), r.value,
                   r.message.c_str());
    }
  }
  std::printf("%zu rows, %zu failed\n", rows.size(), failed);
  return failed == rows.size() ? kExitAllFailed : kExitOk;
}

}  // namespace eif::cli
