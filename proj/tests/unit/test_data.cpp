#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "eif/data/io.hpp"
#include "eif/data/normalize.hpp"
#include "eif/data/scenario.hpp"
#include "eif/data/split.hpp"
#include "eif/data/synthetic.hpp"
#include "eif/data/windows.hpp"
#include "eif/errors.hpp"
#include "oracles.hpp"

using namespace eif;
namespace fs = std::filesystem;

namespace {

Dataset random_dataset(std::size_t t, std::size_t n, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Dataset d = make_dataset(t, n, c);
  std::normal_distribution<double> dist(3.0, 5.0);
  for (double& v : d.values) v = dist(gen);
  return d;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double pearson(const Dataset& d, std::size_t a, std::size_t b) {
  double ma = 0, mb = 0;
  for (std::size_t t = 0; t < d.steps; ++t) ma += d.at(t, a, 0), mb += d.at(t, b, 0);
  ma /= double(d.steps), mb /= double(d.steps);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t t = 0; t < d.steps; ++t) {
    const double x = d.at(t, a, 0) - ma, y = d.at(t, b, 0) - mb;
    sab += x * y, saa += x * x, sbb += y * y;
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("dataset validation") {
  Dataset d = make_dataset(3, 2, 1);
  CHECK_NOTHROW(d.validate());
  d.entity_ids[1] = d.entity_ids[0];
  CHECK_THROWS_AS(d.validate(), ContractError);
  d = make_dataset(3, 2, 1);
  d.values[2] = std::nan("");
  CHECK_THROWS_AS(d.validate(), ContractError);
  d = make_dataset(3, 2, 1);
  CHECK(d.entity_index(d.entity_ids[1]) == 1u);
  CHECK_FALSE(d.entity_index("nope").has_value());
  CHECK_THROWS_AS(d.time_slice(2, 4), ContractError);
}

TEST_CASE("dataset persistence") {
  auto dir = oracle::temp_dir("io");
  Dataset d = random_dataset(17, 5, 3, 1);
  d.start_time = 1700000000;
  d.step_seconds = 300;
  d.channel_names = {"a", "b", "c"};
  save_dataset(d, dir);
  Dataset back = load_dataset(dir);
  CHECK(bit_equal(back.values, d.values));
  CHECK(back.entity_ids == d.entity_ids);
  CHECK(back.channel_names == d.channel_names);
  CHECK(back.start_time == d.start_time);
  CHECK(back.step_seconds == d.step_seconds);
  CHECK(fs::file_size(dir / "values.f64") == 17 * 5 * 3 * 8);

  SUBCASE("truncated blob") {
    fs::resize_file(dir / "values.f64", 17 * 5 * 3 * 8 - 8);
    CHECK_THROWS_AS(load_dataset(dir), CorruptionError);
  }
  SUBCASE("id count mismatch") {
    Dataset small = random_dataset(4, 3, 1, 2);
    save_dataset(small, dir);
    std::ifstream in(dir / "meta.json");
    auto meta = nlohmann::json::parse(in);
    meta["entity_ids"].push_back("extra");
    write_file(dir / "meta.json", meta.dump());
    CHECK_THROWS_AS(load_dataset(dir), CorruptionError);
  }
  SUBCASE("garbage meta") {
    write_file(dir / "meta.json", "{not json");
    CHECK_THROWS_AS(load_dataset(dir), CorruptionError);
  }
  fs::remove_all(dir);
}

TEST_CASE("csv import") {
  auto dir = oracle::temp_dir("csv");
  SUBCASE("wide") {
    write_file(dir / "w.csv", "timestamp,a,b\n0,1.5,2\n60,3,4\n120,5,6\n");
    auto r = import_csv(dir / "w.csv", CsvLayout::kWide);
    CHECK(r.dataset.steps == 3);
    CHECK(r.dataset.entities == 2);
    CHECK(r.dataset.channels == 1);
    CHECK(r.dataset.step_seconds == 60);
    CHECK(r.dataset.entity_ids == std::vector<std::string>{"a", "b"});
    CHECK(r.dataset.at(2, 1, 0) == 6.0);
    CHECK(r.report.missing_count == 0);
  }
  SUBCASE("wide with an empty cell and a gap") {
    write_file(dir / "w.csv", "timestamp,a,b\n0,1,\n120,5,6\n180,7,8\n");
    auto r = import_csv(dir / "w.csv", CsvLayout::kWide);
    CHECK(r.dataset.steps == 4);
    CHECK(r.report.missing_count == 3);
    CHECK(r.dataset.at(0, 1, 0) == 0.0);
    CHECK(r.dataset.at(1, 0, 0) == 0.0);
  }
  SUBCASE("long with one missing cell") {
    write_file(dir / "l.csv",
               "timestamp,entity,channel,value\n"
               "2024-01-01T00:00:00,x,v,1\n2024-01-01T00:00:00,y,v,2\n"
               "2024-01-01T00:05:00,x,v,3\n");
    auto r = import_csv(dir / "l.csv", CsvLayout::kLong);
    CHECK(r.dataset.steps == 2);
    CHECK(r.dataset.entities == 2);
    CHECK(r.dataset.step_seconds == 300);
    CHECK(r.dataset.start_time == 1704067200);
    CHECK(r.report.missing_count == 1);
    CHECK(r.dataset.at(1, 1, 0) == 0.0);
    CHECK(r.dataset.at(1, 0, 0) == 3.0);
  }
  SUBCASE("duplicate row names timestamp and entity") {
    write_file(dir / "l.csv", "timestamp,entity,channel,value\n10,x,v,1\n10,x,v,2\n");
    try {
      import_csv(dir / "l.csv", CsvLayout::kLong);
      FAIL("expected an ingestion error");
    } catch (const IngestionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("10") != std::string::npos);
      CHECK(msg.find("x") != std::string::npos);
    }
  }
  SUBCASE("non-monotone timestamps") {
    write_file(dir / "w.csv", "timestamp,a\n60,1\n0,2\n");
    CHECK_THROWS_AS(import_csv(dir / "w.csv", CsvLayout::kWide), IngestionError);
    write_file(dir / "l.csv", "timestamp,entity,channel,value\n60,x,v,1\n0,x,v,2\n");
    CHECK_THROWS_AS(import_csv(dir / "l.csv", CsvLayout::kLong), IngestionError);
  }
  SUBCASE("bad values") {
    write_file(dir / "w.csv", "timestamp,a\n0,abc\n");
    CHECK_THROWS_AS(import_csv(dir / "w.csv", CsvLayout::kWide), IngestionError);
    CHECK_THROWS_AS(import_csv(dir / "missing.csv", CsvLayout::kWide), IngestionError);
  }
  fs::remove_all(dir);
}

TEST_CASE("chronological split") {
  auto check = [](std::size_t t, std::size_t a, std::size_t b, std::size_t c) {
    auto s = chrono_split(random_dataset(t, 2, 1, t), kDefaultSplitRatios, 1);
    CHECK(s.train.steps == a);
    CHECK(s.val.steps == b);
    CHECK(s.test.steps == c);
  };
  check(100, 60, 20, 20);
  check(10, 6, 2, 2);
  check(2000, 1200, 400, 400);
  check(101, 60, 20, 21);

  Dataset d = random_dataset(50, 3, 2, 3);
  auto s = chrono_split(d, {0.5, 0.3, 0.2}, 1);
  CHECK(s.boundaries == std::array<std::size_t, 2>{25, 40});
  CHECK(s.val.at(0, 2, 1) == d.at(25, 2, 1));
  CHECK(s.test.at(9, 0, 0) == d.at(49, 0, 0));

  CHECK_THROWS_AS(chrono_split(random_dataset(5, 1, 1, 4), kDefaultSplitRatios, 8), SplitError);
  CHECK_THROWS_AS(chrono_split(d, {0.5, 0.5, 0.1}, 1), SplitError);
  CHECK_THROWS_AS(chrono_split(d, {0.8, 0.2, 0.0}, 1), SplitError);
}

TEST_CASE("normalization") {
  Dataset d = make_dataset(20, 3, 1);
  for (std::size_t t = 0; t < 20; ++t) {
    d.at(t, 0, 0) = 7.0;
    d.at(t, 2, 0) = double(t);
  }
  NormStats s = fit_normalizer(d);
  Dataset z = s.apply(d);
  for (std::size_t t = 0; t < 20; ++t) {
    CHECK(z.at(t, 0, 0) == 0.0);
    CHECK(z.at(t, 1, 0) == 0.0);
  }
  CHECK(s.scale(d.entity_ids[1], 0).mean == 0.0);
  CHECK(s.scale(d.entity_ids[1], 0).std == NormStats::kStdFloor);
  CHECK(s.scale(d.entity_ids[0], 0).std == NormStats::kStdFloor);
  // Population std of 0..19.
  CHECK(s.scale(d.entity_ids[2], 0).std == doctest::Approx(std::sqrt(399.0 / 12.0)).epsilon(1e-12));
  // Pooled std ignores floored entities.
  CHECK(s.pooled_stds()[0] == doctest::Approx(std::sqrt(399.0 / 12.0)).epsilon(1e-12));
  CHECK(s.pooled_means()[0] == doctest::Approx((7.0 + 0.0 + 9.5) / 3.0));

  SUBCASE("unknown entities use pooled statistics") {
    Dataset other = make_dataset(2, 1, 1);
    other.entity_ids = {"stranger"};
    other.values = {1.0, 2.0};
    Dataset oz = s.apply(other);
    CHECK(oz.values[0] == doctest::Approx((1.0 - s.pooled_means()[0]) / s.pooled_stds()[0]));
  }
  SUBCASE("excluded entities are not fitted") {
    std::vector<std::string> ex{d.entity_ids[2]};
    NormStats e = NormStats::fit(d, ex);
    CHECK_FALSE(e.knows(d.entity_ids[2]));
    CHECK(e.entity_ids().size() == 2);
  }
  SUBCASE("channel mismatch") {
    CHECK_THROWS_AS(s.apply(make_dataset(2, 3, 2)), ContractError);
  }
}

TEST_CASE("normalization round trip on generated data") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticConfig c;
    c.entities = 12;
    c.clusters = 3;
    c.steps = 200;
    c.emerge_frac = 0.25;
    c.vanish_frac = 0.25;
    c.seed = seed;
    Dataset d = gen_synthetic(c).dataset;
    auto split = chrono_split(d, kDefaultSplitRatios, 1);
    NormStats s = fit_normalizer(split.train);
    Dataset back = s.invert(s.apply(d));
    double worst = 0.0;
    for (std::size_t i = 0; i < d.values.size(); ++i) worst = std::max(worst, std::fabs(back.values[i] - d.values[i]));
    CHECK(worst <= 1e-9);
    for (double v : s.stds()) CHECK(v >= NormStats::kStdFloor);
  }
}

TEST_CASE("windows") {
  CHECK(make_windows(make_dataset(24, 2, 1), 12, 12, 1).size() == 1);
  Dataset d25 = make_dataset(25, 2, 1);
  auto w25 = make_windows(d25, 12, 12, 1);
  CHECK(w25.starts() == std::vector<std::size_t>{0, 1});
  Dataset d23 = make_dataset(23, 2, 1);
  auto w23 = make_windows(d23, 12, 12, 1);
  CHECK(w23.empty());
  CHECK(w23.too_short());
  CHECK_THROWS_AS(make_windows(d25, 12, 12, 0), ConfigError);

  for (std::size_t len : {30, 47, 100})
    for (std::size_t stride : {1, 2, 5, 7}) {
      Dataset d = make_dataset(len, 1, 1);
      CHECK(make_windows(d, 6, 4, stride).size() == (len - 10) / stride + 1);
    }

  Dataset d = random_dataset(40, 3, 2, 5);
  auto w = make_windows(d, 8, 4, 3);
  std::vector<std::size_t> idx(w.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto b = w.batch(idx);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::size_t s = b.starts[i];
    CHECK(s == 3 * i);
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(b.inputs.at({i, 7, n, c}) == d.at(s + 7, n, c));
        CHECK(b.targets.at({i, 0, n, c}) == d.at(s + 8, n, c));
        CHECK(b.targets.at({i, 3, n, c}) == d.at(s + 11, n, c));
      }
  }
  std::vector<std::size_t> bad{w.size()};
  CHECK_THROWS_AS(w.batch(bad), ContractError);

  Rng r1(9), r2(9);
  auto o1 = w.order(&r1), o2 = w.order(&r2);
  CHECK(o1 == o2);
  std::vector<std::size_t> sorted = o1;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == idx);
  CHECK(w.order() == idx);
}

TEST_CASE("split and windows never leak across segments") {
  Dataset d = make_dataset(300, 1, 1);
  for (std::size_t t = 0; t < 300; ++t) d.at(t, 0, 0) = double(t);  // value encodes time
  auto s = chrono_split(d, kDefaultSplitRatios, 24);
  auto wt = make_windows(s.train, 12, 12, 1);
  auto wv = make_windows(s.val, 12, 12, 1);
  std::vector<std::size_t> all_t(wt.size()), all_v(wv.size());
  std::iota(all_t.begin(), all_t.end(), 0);
  std::iota(all_v.begin(), all_v.end(), 0);
  double max_train = -1, min_val_target = 1e9;
  for (double v : wt.batch(all_t).inputs.data()) max_train = std::max(max_train, v);
  for (double v : wt.batch(all_t).targets.data()) max_train = std::max(max_train, v);
  for (double v : wv.batch(all_v).targets.data()) min_val_target = std::min(min_val_target, v);
  CHECK(max_train < min_val_target);
}

TEST_CASE("synthetic generator") {
  SyntheticConfig c;
  c.entities = 2;
  c.clusters = 1;
  c.steps = 50;
  c.noise_sigma = 0.0;
  c.scale_min = c.scale_max = 1.5;
  auto r = gen_synthetic(c);
  for (std::size_t t = 0; t < 50; ++t) CHECK(r.dataset.at(t, 0, 0) == r.dataset.at(t, 1, 0));

  SyntheticConfig e;
  e.entities = 100;
  e.steps = 500;
  e.emerge_frac = 0.1;
  e.vanish_frac = 0.1;
  e.seed = 3;
  auto g = gen_synthetic(e);
  std::size_t leading = 0, trailing = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    if (g.dataset.at(0, i, 0) == 0.0 && g.dataset.at(299, i, 0) == 0.0) ++leading;
    if (g.dataset.at(499, i, 0) == 0.0) ++trailing;
  }
  CHECK(leading == 10);
  CHECK(trailing == 10);
  CHECK(g.emerging.size() == 10);
  for (std::size_t k = 0; k < g.emerging.size(); ++k) {
    CHECK(g.onset[k] >= 300);
    CHECK(g.dataset.at(g.onset[k] - 1, g.emerging[k], 0) == 0.0);
  }
  for (std::size_t k = 0; k < g.vanishing.size(); ++k) CHECK(g.offset[k] >= 300);
  std::set<std::size_t> both(g.emerging.begin(), g.emerging.end());
  for (std::size_t i : g.vanishing) CHECK_FALSE(both.contains(i));

  auto again = gen_synthetic(e);
  CHECK(bit_equal(again.dataset.values, g.dataset.values));
  e.seed = 4;
  CHECK_FALSE(bit_equal(gen_synthetic(e).dataset.values, g.dataset.values));

  SyntheticConfig bad;
  bad.emerge_frac = 0.6;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.clusters = 200;
  CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
}

TEST_CASE("synthetic clusters are correlated") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticConfig c;
    c.entities = 20;
    c.clusters = 4;
    c.steps = 1000;
    c.noise_sigma = 0.05;
    c.seed = seed;
    auto r = gen_synthetic(c);
    double within = 0, across = 0;
    int nw = 0, na = 0;
    for (std::size_t a = 0; a < 20; ++a)
      for (std::size_t b = a + 1; b < 20; ++b) {
        const double p = pearson(r.dataset, a, b);
        if (r.cluster_of[a] == r.cluster_of[b]) within += p, ++nw;
        else across += p, ++na;
      }
    CHECK(within / nw > across / na + 0.2);
  }
}

TEST_CASE("scenarios") {
  SyntheticConfig c;
  c.entities = 100;
  c.steps = 60;
  auto split = chrono_split(gen_synthetic(c).dataset, kDefaultSplitRatios, 1);

  ScenarioSpec s0{0, 0.4, 1, ScenarioFill::kDrop};
  auto r0 = apply_scenario(split.train, split.test, s0);
  CHECK(bit_equal(r0.train.values, split.train.values));
  CHECK(bit_equal(r0.test.values, split.test.values));
  CHECK(r0.new_ids.empty());

  auto r1 = apply_scenario(split.train, split.test, {1, 0.1, 5, ScenarioFill::kDrop});
  CHECK(r1.train.entities == 90);
  CHECK(r1.test.entities == 100);
  CHECK(r1.new_ids.size() == 10);
  for (const auto& id : r1.new_ids) CHECK_FALSE(r1.train.entity_index(id).has_value());

  auto r2 = apply_scenario(split.train, split.test, {2, 0.1, 5, ScenarioFill::kDrop});
  CHECK(r2.train.entities == 100);
  CHECK(r2.test.entities == 90);

  auto r3 = apply_scenario(split.train, split.test, {3, 0.1, 5, ScenarioFill::kDrop});
  CHECK(r3.train.entities == 90);
  CHECK(r3.test.entities == 90);
  std::set<std::string> tr(r3.train.entity_ids.begin(), r3.train.entity_ids.end());
  std::size_t overlap = 0;
  for (const auto& id : r3.test.entity_ids) overlap += tr.contains(id);
  CHECK(overlap == 80);

  // Retained series are copied bitwise.
  for (std::size_t n = 0; n < r3.train.entities; ++n) {
    const std::size_t src = *split.train.entity_index(r3.train.entity_ids[n]);
    for (std::size_t t = 0; t < r3.train.steps; ++t) CHECK(r3.train.at(t, n, 0) == split.train.at(t, src, 0));
  }

  auto z = apply_scenario(split.train, split.test, {1, 0.1, 5, ScenarioFill::kZero});
  CHECK(z.train.entities == 100);
  CHECK(z.new_ids == r1.new_ids);
  const std::size_t hidden = *z.train.entity_index(z.new_ids[0]);
  for (std::size_t t = 0; t < z.train.steps; ++t) CHECK(z.train.at(t, hidden, 0) == 0.0);

  CHECK(apply_scenario(split.train, split.test, {1, 0.1, 6, ScenarioFill::kDrop}).new_ids != r1.new_ids);
  CHECK_THROWS_AS(apply_scenario(split.train, split.test, {3, 0.5000001, 5, ScenarioFill::kDrop}), ConfigError);
  CHECK_THROWS_AS((ScenarioSpec{4, 0.1, 0, ScenarioFill::kDrop}.validate()), ConfigError);
  ScenarioSpec js{3, 0.2, 9, ScenarioFill::kZero};
  CHECK(scenario_from_json(to_json(js)) == js);
}
