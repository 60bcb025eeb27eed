// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "eif/analysis/bench.hpp"
#include "eif/analysis/cka.hpp"
#include "eif/analysis/sweep.hpp"
#include "eif/compute/adam.hpp"
#include "eif/compute/grad_check.hpp"
#include "eif/compute/ops.hpp"
#include "eif/compute/tape.hpp"
#include "eif/data/io.hpp"
#include "eif/data/synthetic.hpp"
#include "eif/data/windows.hpp"
#include "eif/train/checkpoint.hpp"
#include "eif/train/metrics.hpp"
#include "eif/train/trainer.hpp"
#include "oracles.hpp"

using namespace eif;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Tensor gather_entities(const Tensor& x, const std::vector<std::size_t>& perm) {
  const std::size_t b = x.dim(0), s = x.dim(1), n_in = x.dim(2), c = x.dim(3), n = perm.size();
  Tensor out(Shape{b, s, n, c});
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < b * s; ++i)
    for (std::size_t e = 0; e < n; ++e)
      for (std::size_t k = 0; k < c; ++k) dst[(i * n + e) * c + k] = x.data()[(i * n_in + perm[e]) * c + k];
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset reference_data() {
  SyntheticConfig c;
  c.entities = 100;
  c.clusters = 5;
  c.steps = 2000;
  c.noise_sigma = 0.3;
  c.seed = 7;
  return gen_synthetic(c).dataset;
}

Outcome gradients() {
  ModelConfig c;
  c.history_len = 8;
  c.forecast_len = 4;
  c.channels = 1;
  c.embed_dim = 8;
  c.latent_count = 3;
  c.num_blocks = 2;
  c.seed = 1;
  ForecastModel m(c);
  std::mt19937_64 gen(2);
  Tensor x = oracle::random_tensor({1, 8, 4, 1}, gen);
  Tensor target = oracle::random_tensor({1, 4, 4, 1}, gen);
  Tensor w = oracle::random_tensor({1, 4, 4, 1}, gen);
  auto loss = [&] { return ops::sum(ops::mul(ops::sub(m.forward(x), target), w)); };
  GradCheckOptions opt;
  opt.h = 1e-5;
  auto r = grad_check(loss, m.parameters(), opt);
  return {r.max_rel_error < 1e-4,
          fmt("max rel error %.3g (worst %s[%zu])", r.max_rel_error, r.worst_param.c_str(), r.worst_index)};
}

Outcome frozen_keys() {
  SyntheticConfig sc;
  sc.entities = 20;
  sc.clusters = 4;
  sc.steps = 400;
  sc.seed = 3;
  Dataset d = gen_synthetic(sc).dataset;
  Dataset z = fit_normalizer(d).apply(d);
  ModelConfig c;
  c.seed = 5;
  ForecastModel m(c);
  const auto init = m.snapshot();
  WindowSet windows(z, c.history_len, c.forecast_len, 1);
  Rng rng(6);
  AdamState opt;
  opt.lr = 1e-3;
  std::size_t steps = 0;
  while (steps < 200) {
    const auto order = windows.order(&rng);
    for (std::size_t b = 0; b + 8 <= order.size() && steps < 200; b += 8, ++steps) {
      WindowBatch wb = windows.batch(std::span<const std::size_t>(order.data() + b, 8));
      Tape tape;
      TapeScope scope(tape);
      Tensor loss = ops::mae_loss(m.forward(wb.inputs), wb.targets);
      tape.backward(loss);
      adam_step(m.parameters(), opt);
    }
  }
  bool frozen_ok = true;
  std::size_t changed = 0, total = 0, frozen = 0;
  const auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto now = params[i].tensor().data();
    const auto& then = init[i];
    if (!params[i].trainable()) {
      ++frozen;
      frozen_ok = frozen_ok && std::memcmp(now.data(), then.data(), now.size_bytes()) == 0;
      continue;
    }
    for (std::size_t k = 0; k < now.size(); ++k) {
      ++total;
      changed += std::memcmp(&now[k], &then[k], sizeof(double)) != 0;
    }
  }
  const double frac = double(changed) / double(total);
  return {frozen_ok && frozen == c.num_blocks && frac >= 0.99,
          fmt("%zu frozen buffers %s after %zu steps; %.4f of %zu trainable scalars changed", frozen,
              frozen_ok ? "bitwise unchanged" : "MODIFIED", steps, frac, total)};
}

Outcome equivariance() {
  SyntheticConfig sc;
  sc.entities = 64;
  sc.clusters = 4;
  sc.steps = 300;
  sc.seed = 8;
  Dataset d64 = gen_synthetic(sc).dataset;
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.lr = 1e-3;
  tc.train_stride = 4;
  tc.val_stride = 4;
  tc.model.embed_dim = 16;
  tc.model.seed = 9;
  auto res = train(tc, prepare_experiment(d64, tc.model, tc.scenario));
  const Checkpoint& ck = res.checkpoint;

  std::mt19937_64 gen(10);
  Tensor x = oracle::random_tensor({2, 12, 64, 1}, gen, -2, 2);
  Tensor y = ck.model.forward(x);
  std::vector<std::size_t> perm(64);
  std::iota(perm.begin(), perm.end(), 0);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    std::shuffle(perm.begin(), perm.end(), gen);
    Tensor yp = ck.model.forward(gather_entities(x, perm));
    Tensor py = gather_entities(y, perm);
    worst = std::max(worst, max_abs_diff(yp.data(), py.data()));
  }

  bool inductive = true;
  std::string why;
  std::size_t hz[] = {12};
  for (std::size_t n : {80, 1}) {
    sc.entities = n;
    sc.clusters = 1;
    sc.seed = 11 + n;
    try {
      Dataset other = gen_synthetic(sc).dataset;
      auto rep = evaluate(ck, other.time_slice(0, 100), hz);
      inductive = inductive && std::isfinite(rep.average.mae);
    } catch (const std::exception& e) {
      inductive = false;
      why = e.what();
    }
  }

  std::vector<std::size_t> dup(64);
  std::iota(dup.begin(), dup.end(), 0);
  dup.push_back(17);
  Tensor yd = ck.model.forward(gather_entities(x, dup));
  double dup_gap = 0.0;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t f = 0; f < 12; ++f) dup_gap = std::max(dup_gap, std::fabs(yd.at({b, f, 17, 0}) - yd.at({b, f, 64, 0})));

  return {worst < 1e-9 && inductive && dup_gap < 1e-9,
          fmt("perm max |diff| %.3g; N=80 and N=1 eval %s%s; duplicate gap %.3g", worst, inductive ? "ok" : "FAILED ",
              why.c_str(), dup_gap)};
}

Outcome scaling() {
  BenchConfig cfg;
  cfg.entity_counts = geometric_counts(1024, 16384, 2);
  cfg.repeats = 5;
  BenchReport rep = bench_forward(cfg);
  std::optional<double> ei, iv;
  for (const auto& s : rep.slopes) (s.arch == Arch::kEiFormer ? ei : iv) = s.slope;
  bool guard_gap = false;
  for (const auto& r : rep.records) {
    if (r.arch != Arch::kIVariate || r.status != BenchStatus::kOomGuard) continue;
    for (const auto& e : rep.records)
      guard_gap = guard_gap || (e.arch == Arch::kEiFormer && e.entities == r.entities && e.status == BenchStatus::kOk);
  }
  ModelConfig e, v;
  e.arch = Arch::kEiFormer;
  v.arch = Arch::kIVariate;
  bool ratios = true;
  for (std::size_t n : cfg.entity_counts) {
    ratios = ratios && attention_map_elements(e, 1, 2 * n) * 8 == 2 * attention_map_elements(e, 1, n) * 8;
    ratios = ratios && attention_map_elements(v, 1, 2 * n) * 8 == 4 * attention_map_elements(v, 1, n) * 8;
  }
  const bool pass = ei && iv && *ei >= 0.8 && *ei <= 1.3 && *iv >= 1.6 && guard_gap && ratios;
  return {pass, fmt("eiformer slope %.3f, ivariate slope %.3f, oom-guard gap %s, byte ratios %s", ei.value_or(NAN),
                    iv.value_or(NAN), guard_gap ? "yes" : "no", ratios ? "2 and 4" : "WRONG")};
}

Outcome cka() {
  std::mt19937_64 gen(12);
  auto random_matrix = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    std::normal_distribution<double> dist;
    for (double& v : m.values) v = dist(gen);
    return m;
  };
  double self_err = 0, orth_err = 0, scale_err = 0, hsic_err = 0, sym_err = 0;
  for (int rep = 0; rep < 20; ++rep) {
    Matrix x = random_matrix(32, 6);
    Matrix q = random_matrix(6, 6);
    for (std::size_t j = 0; j < 6; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        double dot = 0;
        for (std::size_t i = 0; i < 6; ++i) dot += q(i, j) * q(i, k);
        for (std::size_t i = 0; i < 6; ++i) q(i, j) -= dot * q(i, k);
      }
      double nrm = 0;
      for (std::size_t i = 0; i < 6; ++i) nrm += q(i, j) * q(i, j);
      for (std::size_t i = 0; i < 6; ++i) q(i, j) /= std::sqrt(nrm);
    }
    Matrix xr(32, 6);
    xr.values = oracle::matmul(x.values, q.values, 32, 6, 6);
    Matrix xs = x;
    for (double& v : xs.values) v *= 3.7;
    self_err = std::max(self_err, std::fabs(linear_cka(x, x).value - 1.0));
    orth_err = std::max(orth_err, std::fabs(linear_cka(x, xr).value - 1.0));
    scale_err = std::max(scale_err, std::fabs(linear_cka(x, xs).value - 1.0));
    Matrix a = gram(random_matrix(8, 3)), b = gram(random_matrix(8, 5));
    hsic_err = std::max(hsic_err, std::fabs(hsic(a, b) - oracle::hsic(a.values, b.values, 8)));
  }
  ModelConfig c2, c3;
  c2.embed_dim = c3.embed_dim = 8;
  c2.seed = 1;
  c3.seed = 2;
  c3.num_blocks = 3;
  Tensor x = oracle::random_tensor({24, 12, 6, 1}, gen);
  RepStack sa = extract_representations(ForecastModel(c2), x), sb = extract_representations(ForecastModel(c3), x);
  CkaMatrix ab = cka_matrix(sa, sb), ba = cka_matrix(sb, sa);
  for (std::size_t i = 0; i < ab.scores.rows; ++i)
    for (std::size_t j = 0; j < ab.scores.cols; ++j) sym_err = std::max(sym_err, std::fabs(ab.scores(i, j) - ba.scores(j, i)));
  const bool pass = self_err <= 1e-6 && orth_err <= 1e-6 && scale_err <= 1e-6 && hsic_err <= 1e-10 && sym_err <= 1e-9;
  return {pass, fmt("self %.2g, orthogonal %.2g, scale %.2g, hsic vs oracle %.2g, transpose %.2g", self_err, orth_err,
                    scale_err, hsic_err, sym_err)};
}

// Shared between criteria 6 and 7.
struct ForecastRuns {
  std::optional<double> eiformer_s0;
  double eiformer_s0_seconds = 0.0;
};
ForecastRuns g_runs;

TrainConfig protocol(Arch arch, int scenario) {
  TrainConfig tc;
  tc.model.arch = arch;
  tc.model.seed = 1;
  tc.seed = 1;
  tc.lr = 1e-3;
  tc.max_epochs = 20;
  tc.patience = 20;
  tc.train_stride = 1;
  tc.val_stride = 4;
  tc.scenario = {scenario, 0.10, 3, ScenarioFill::kZero};
  tc.norm_fit = NormFit::kBeforeScenario;
  if (arch == Arch::kLinear) {
    tc.lr = 3e-3;
    tc.max_epochs = tc.patience = 60;
  }
  return tc;
}

std::pair<double, double> test_mae(const TrainConfig& tc, const Dataset& full) {
  const auto t0 = std::chrono::steady_clock::now();
  Experiment ex = prepare_experiment(full, tc.model, tc.scenario, tc.norm_fit);
  auto res = train(tc, ex);
  std::size_t hz[] = {3, 6, 12};
  const double mae = evaluate(res.checkpoint, ex.test_raw, hz).average.mae;
  return {mae, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
}

double eiformer_s0(const Dataset& full) {
  if (!g_runs.eiformer_s0) {
    auto [mae, secs] = test_mae(protocol(Arch::kEiFormer, 0), full);
    g_runs.eiformer_s0 = mae;
    g_runs.eiformer_s0_seconds = secs;
  }
  return *g_runs.eiformer_s0;
}

Outcome skill() {
  const Dataset full = reference_data();
  const double ei = eiformer_s0(full);
  auto [lin, lin_secs] = test_mae(protocol(Arch::kLinear, 0), full);
  const double gain = 1.0 - ei / lin;
  const bool pass = gain >= 0.10 && g_runs.eiformer_s0_seconds < 600 && lin_secs < 600;
  return {pass, fmt("eiformer MAE %.5f (%.0fs), linear MAE %.5f (%.0fs), %.1f%% lower", ei, g_runs.eiformer_s0_seconds,
                    lin, lin_secs, 100.0 * gain)};
}

Outcome robustness() {
  const Dataset full = reference_data();
  const auto t0 = std::chrono::steady_clock::now();
  const double e0 = eiformer_s0(full);
  const double e1 = test_mae(protocol(Arch::kEiFormer, 1), full).first;
  const double f0 = test_mae(protocol(Arch::kFeatMlp, 0), full).first;
  const double f1 = test_mae(protocol(Arch::kFeatMlp, 1), full).first;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() +
                      g_runs.eiformer_s0_seconds;
  const double re = e1 / e0, rf = f1 / f0, factor = rf / re;
  return {factor >= 1.2 && secs < 1200,
          fmt("featmlp %.5f -> %.5f (x%.3f), eiformer %.5f -> %.5f (x%.3f), factor %.3f, %.0fs", f0, f1, rf, e0, e1, re,
              factor, secs)};
}

Outcome metric_oracles() {
  std::mt19937_64 gen(13);
  double worst = 0.0;
  bool mask_ok = true;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + gen() % 500;
    auto p = oracle::random_vec(n, gen, -3, 3), t = oracle::random_vec(n, gen, -3, 3);
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < n; i += 5, ++zeros) t[i] = 0.0;
    worst = std::max(worst, std::fabs(mae(p, t) - oracle::mae(p, t)));
    worst = std::max(worst, std::fabs(rmse(p, t) - oracle::rmse(p, t)));
    std::size_t masked = 0;
    const double want = oracle::mape(p, t, kMapeMaskEps, &masked);
    auto got = mape(p, t);
    mask_ok = mask_ok && got.masked == masked && masked >= zeros;
    if (got.defined) worst = std::max(worst, std::fabs(got.percent - want) / std::max(1.0, std::fabs(want)));
  }
  return {worst <= 1e-12 && mask_ok, fmt("max deviation %.3g, mask counts %s", worst, mask_ok ? "match" : "DIFFER")};
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(EIF_BINARY) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string drop_column(const std::string& csv, std::size_t col) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(ls, cell, ',')) {
      if (i++ != col) out += cell + ",";
    }
    out += '\n';
  }
  return out;
}

Outcome determinism() {
  const fs::path root = oracle::temp_dir("acceptance-det");
  std::vector<std::string> failures;

  // Library level.
  SyntheticConfig sc;
  sc.entities = 10;
  sc.clusters = 2;
  sc.steps = 200;
  sc.seed = 14;
  Dataset d = gen_synthetic(sc).dataset;
  save_dataset(d, root / "ds");
  Dataset back = load_dataset(root / "ds");
  if (back.values.size() != d.values.size() ||
      std::memcmp(back.values.data(), d.values.data(), d.values.size() * sizeof(double)) != 0)
    failures.push_back("dataset round trip");
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.train_stride = 3;
  tc.model.embed_dim = 8;
  auto ex = prepare_experiment(d, tc.model, tc.scenario);
  const std::string c1 = encode_checkpoint(train(tc, ex).checkpoint);
  const std::string c2 = encode_checkpoint(train(tc, ex).checkpoint);
  if (c1 != c2) failures.push_back("checkpoint determinism");
  if (encode_checkpoint(decode_checkpoint(c1)) != c1) failures.push_back("checkpoint round trip");

  // Every command, twice.
  const std::string data = (root / "data").string();
  struct Step {
    std::string name, args;
    std::vector<std::pair<std::string, int>> outputs;  // file, column to ignore (-1 none)
  };
  std::ofstream(root / "in.csv") << "timestamp,a,b\n0,1,2\n60,3,\n120,5,6\n";
  const std::string train_flags = " --history 12 --horizon 12 --dim 8 --latents 3 --blocks 2 --epochs 2 --train-stride 3 --seed 1";
  std::vector<Step> steps = {
      {"gen-data", "gen-data --entities 10 --clusters 2 --steps 200 --season 12 --seed 3 --out ", {{"values.f64", -1}, {"meta.json", -1}}},
      {"import-csv", "import-csv --input " + (root / "in.csv").string() + " --out ", {{"values.f64", -1}, {"meta.json", -1}}},
      {"train", "train --data " + data + train_flags + " --out ", {{"ckpt.eif", -1}, {"log.jsonl", -1}}},
      {"eval", "eval --ckpt " + data + "_train/ckpt.eif --data " + data + " --out ", {{"metrics.csv", -1}, {"metrics.json", -1}}},
      {"bench", "bench --min-n 16 --max-n 64 --dim 8 --out ", {{"bench.csv", 2}}},
      {"cka", "cka --ckpt-a " + data + "_train/ckpt.eif --data " + data + " --samples 16 --out ", {{"cka.csv", -1}, {"cka.pgm", -1}}},
      {"sweep", "sweep --axis lr --values 1e-3,1e-4 --base-config " + data + "_cfg.json --data " + data + " --out ", {{"sweep.csv", 4}}},
  };
  if (run_cli("gen-data --entities 10 --clusters 2 --steps 200 --season 12 --seed 3 --out " + data) != 0 ||
      run_cli("train --data " + data + train_flags + " --out " + data + "_train") != 0) {
    failures.push_back("setup");
  } else {
    std::ifstream in(data + "_train/manifest.json");
    std::ofstream(data + "_cfg.json") << nlohmann::json::parse(in).at("config").dump();
  }
  for (const auto& s : steps) {
    const fs::path a = root / (s.name + "_a"), b = root / (s.name + "_b");
    if (run_cli(s.args + a.string()) != 0 || run_cli(s.args + b.string()) != 0) {
      failures.push_back(s.name + " exit");
      continue;
    }
    for (const auto& [file, skip] : s.outputs) {
      std::string x = slurp(a / file), y = slurp(b / file);
      if (skip >= 0) x = drop_column(x, std::size_t(skip)), y = drop_column(y, std::size_t(skip));
      if (x.empty() || x != y) failures.push_back(s.name + "/" + file);
    }
  }
  fs::remove_all(root);
  std::string detail = "library round trips and 7 commands x2";
  if (!failures.empty()) {
    detail += "; mismatched:";
    for (const auto& f : failures) detail += " " + f;
  } else {
    detail += " byte-identical (timing columns excluded)";
  }
  return {failures.empty(), detail};
}

Outcome lr_sweep() {
  TrainConfig base;
  base.max_epochs = 3;
  base.train_stride = 2;
  base.val_stride = 4;
  base.model.seed = 1;
  base.seed = 1;
  SyntheticConfig sc;
  sc.entities = 30;
  sc.clusters = 3;
  sc.steps = 600;
  sc.seed = 15;
  const auto rows = sweep(base, SweepAxis::kLr, {1e-3, 1e-4, 1e-5}, gen_synthetic(sc).dataset);
  const std::string csv = sweep_csv(SweepAxis::kLr, rows);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  bool well_formed = line == "axis,value,val_mae,test_mae,wall_seconds,param_count,status,message";
  std::size_t n = 0;
  std::string best;
  double best_val = INFINITY;
  while (std::getline(in, line)) {
    ++n;
    well_formed = well_formed && std::count(line.begin(), line.end(), ',') == 7 && line.starts_with("lr,");
  }
  for (const auto& r : rows) {
    well_formed = well_formed && r.status == "ok" && std::isfinite(r.val_mae) && std::isfinite(r.test_mae);
    if (r.val_mae < best_val) best_val = r.val_mae, best = fmt("%g", r.value);
  }
  return {well_formed && n == 3, fmt("%zu rows, %s; lowest val MAE at lr=%s (informational)", n,
                                     well_formed ? "well-formed" : "MALFORMED", best.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradients},
      {"frozen keys", frozen_keys},
      {"permutation equivariance and inductiveness", equivariance},
      {"linear vs quadratic scaling", scaling},
      {"CKA invariants", cka},
      {"forecasting skill vs linear", skill},
      {"scenario robustness", robustness},
      {"metric oracles", metric_oracles},
      {"determinism and round trips", determinism},
      {"learning-rate sweep", lr_sweep},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!wanted.empty() && !wanted.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %s: %s [%s] (%.1fs)\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
