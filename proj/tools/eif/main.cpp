#include <cctype>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "eif/errors.hpp"

using namespace eif;
using namespace eif::cli;

namespace {

// Every long flag --foo-bar can also come from EIF_FOO_BAR.
void attach_env(CLI::App& app) {
  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) {
    for (CLI::Option* opt : sub->get_options()) {
      const auto& names = opt->get_lnames();
      if (names.empty() || names.front() == "help") continue;
      std::string env = "EIF_";
      for (char ch : names.front()) env += ch == '-' ? '_' : static_cast<char>(std::toupper(ch));
      opt->envname(env);
    }
  }
}

std::set<std::string> given_flags(CLI::App* sub) {
  std::set<std::string> out;
  for (CLI::Option* opt : sub->get_options()) {
    if (opt->count() > 0 && !opt->get_lnames().empty()) out.insert(opt->get_lnames().front());
  }
  return out;
}

int fail(int code, const char* kind, const std::string& what) {
  std::fprintf(stderr, "eif: %s: %s\n", kind, what.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EiFormer spatial-temporal forecasting toolkit", "eif"};
  app.set_version_flag("--version", EIF_VERSION);
  app.require_subcommand(1);

  GenDataOptions gen;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a clustered synthetic dataset");
  c_gen->add_option("--entities", gen.synth.entities, "Number of entities")->capture_default_str();
  c_gen->add_option("--clusters", gen.synth.clusters, "Number of clusters")->capture_default_str();
  c_gen->add_option("--steps", gen.synth.steps, "Number of time steps")->capture_default_str();
  c_gen->add_option("--season", gen.synth.season_period, "Season period in steps")->capture_default_str();
  c_gen->add_option("--noise", gen.synth.noise_sigma, "Observation noise sigma")->capture_default_str();
  c_gen->add_option("--emerge-frac", gen.synth.emerge_frac, "Fraction of emerging entities")->capture_default_str();
  c_gen->add_option("--vanish-frac", gen.synth.vanish_frac, "Fraction of vanishing entities")->capture_default_str();
  c_gen->add_option("--scale-min", gen.synth.scale_min, "Smallest entity amplitude")->capture_default_str();
  c_gen->add_option("--scale-max", gen.synth.scale_max, "Largest entity amplitude")->capture_default_str();
  c_gen->add_option("--trend-sigma", gen.synth.trend_sigma, "Cluster trend step deviation")->capture_default_str();
  c_gen->add_option("--seed", gen.synth.seed, "Random seed")->capture_default_str();
  c_gen->add_option("--out", gen.out, "Output directory")->required();

  ImportOptions imp;
  auto* c_imp = app.add_subcommand("import-csv", "Convert a CSV file into a dataset directory");
  c_imp->add_option("--input", imp.input, "CSV file")->required();
  c_imp->add_option("--layout", imp.layout, "wide or long")->capture_default_str();
  c_imp->add_option("--out", imp.out, "Output directory")->required();

  TrainOptions tr;
  auto* c_train = app.add_subcommand("train", "Train a forecaster");
  c_train->add_option("--config", tr.config, "Base TrainConfig JSON; flags given override it");
  c_train->add_option("--data", tr.data, "Dataset directory");
  c_train->add_option("--arch", tr.arch, "eiformer, ivariate, linear or featmlp")->capture_default_str();
  c_train->add_option("--scenario", tr.scenario, "Entity scenario 0-3")->capture_default_str();
  c_train->add_option("--fraction", tr.fraction, "Fraction of entities the scenario affects")->capture_default_str();
  c_train->add_option("--scenario-seed", tr.scenario_seed, "Seed of the scenario entity draw")->capture_default_str();
  c_train->add_option("--fill", tr.fill, "drop hidden entities or zero-fill them")->capture_default_str();
  c_train->add_option("--normalization", tr.normalization, "Fit statistics after or before the scenario")->capture_default_str();
  c_train->add_option("--history", tr.history, "History length T")->capture_default_str();
  c_train->add_option("--horizon", tr.horizon, "Forecast length F")->capture_default_str();
  c_train->add_option("--blocks", tr.blocks, "Number of blocks")->capture_default_str();
  c_train->add_option("--dim", tr.dim, "Embedding width D")->capture_default_str();
  c_train->add_option("--latents", tr.latents, "Latent count M")->capture_default_str();
  c_train->add_option("--hidden-mult", tr.hidden_mult, "Temporal MLP width multiplier")->capture_default_str();
  c_train->add_flag("--instance-norm", tr.instance_norm, "Standardize each history window");
  c_train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  c_train->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
  c_train->add_option("--epochs", tr.epochs, "Maximum epochs")->capture_default_str();
  c_train->add_option("--patience", tr.patience, "Early-stopping patience")->capture_default_str();
  c_train->add_option("--clip", tr.clip, "Gradient max-norm, <= 0 disables")->capture_default_str();
  c_train->add_option("--train-stride", tr.train_stride, "Training window stride")->capture_default_str();
  c_train->add_option("--val-stride", tr.val_stride, "Validation window stride")->capture_default_str();
  c_train->add_option("--seed", tr.seed, "Random seed")->capture_default_str();
  c_train->add_option("--out", tr.out, "Output directory")->required();

  EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on its test segment");
  c_eval->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  c_eval->add_option("--data", ev.data, "Dataset directory")->required();
  c_eval->add_option("--horizons", ev.horizons, "Comma-separated horizon steps")->capture_default_str();
  c_eval->add_option("--out", ev.out, "Output directory")->required();

  BenchOptions be;
  auto* c_bench = app.add_subcommand("bench", "Forward-pass runtime and memory scaling in N");
  c_bench->add_option("--archs", be.archs, "Comma-separated architectures")->capture_default_str();
  c_bench->add_option("--min-n", be.min_n, "Smallest entity count")->capture_default_str();
  c_bench->add_option("--max-n", be.max_n, "Largest entity count")->capture_default_str();
  c_bench->add_option("--factor", be.factor, "Geometric step")->capture_default_str();
  c_bench->add_option("--repeats", be.repeats, "Timed repeats per point (>= 3)")->capture_default_str();
  c_bench->add_option("--budget-bytes", be.budget_bytes, "Attention-map memory budget")->capture_default_str();
  c_bench->add_option("--history", be.history, "History length T")->capture_default_str();
  c_bench->add_option("--horizon", be.horizon, "Forecast length F")->capture_default_str();
  c_bench->add_option("--dim", be.dim, "Embedding width D")->capture_default_str();
  c_bench->add_option("--latents", be.latents, "Latent count M")->capture_default_str();
  c_bench->add_option("--blocks", be.blocks, "Number of blocks")->capture_default_str();
  c_bench->add_option("--seed", be.seed, "Random seed")->capture_default_str();
  c_bench->add_option("--out", be.out, "Output directory")->required();

  CkaOptions ck;
  auto* c_cka = app.add_subcommand("cka", "Layer-wise linear CKA between representations");
  c_cka->add_option("--ckpt-a", ck.ckpt_a, "First checkpoint")->required();
  c_cka->add_option("--ckpt-b", ck.ckpt_b, "Second checkpoint (cross-model matrix)");
  c_cka->add_option("--data", ck.data, "Dataset directory")->required();
  c_cka->add_option("--samples", ck.samples, "Number of test windows")->capture_default_str();
  c_cka->add_option("--out", ck.out, "Output directory")->required();

  SweepOptions sw;
  auto* c_sweep = app.add_subcommand("sweep", "One training run per hyper-parameter value");
  c_sweep->add_option("--axis", sw.axis, "lr, layers or neurons")->required();
  c_sweep->add_option("--values", sw.values, "Comma-separated values")->required();
  c_sweep->add_option("--base-config", sw.base_config, "Base TrainConfig JSON");
  c_sweep->add_option("--data", sw.data, "Dataset directory (overrides the base config)");
  c_sweep->add_option("--out", sw.out, "Output directory")->required();

  attach_env(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (c_gen->parsed()) return run_gen_data(gen);
    if (c_imp->parsed()) return run_import_csv(imp);
    if (c_train->parsed()) return run_train(tr, given_flags(c_train));
    if (c_eval->parsed()) return run_eval(ev);
    if (c_bench->parsed()) return run_bench(be);
    if (c_cka->parsed()) return run_cka(ck);
    if (c_sweep->parsed()) return run_sweep(sw);
  } catch (const ConfigError& e) {
    return fail(kExitValidation, "invalid argument", e.what());
  } catch (const NumericError& e) {
    return fail(kExitNumeric, "numeric abort", e.what());
  } catch (const Error& e) {
    return fail(kExitIo, "data error", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(kExitIo, "i/o error", e.what());
  } catch (const std::exception& e) {
    return fail(1, "error", e.what());
  }
  return kExitValidation;
}
