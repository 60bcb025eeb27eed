#include "eif/train/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "eif/errors.hpp"

namespace eif {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

void CompensatedSum::merge(const CompensatedSum& other) {
  add(other.sum_);
  add(other.compensation_);
}

namespace {

void require_same(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": prediction and target lengths differ");
  }
  if (a.empty()) throw ShapeError(std::string(what) + ": empty input");
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json number_or_null(double v, bool defined) {
  return defined ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json row_json(const MetricRow& r) {
  return {{"label", r.label},
          {"mae", r.mae},
          {"rmse", r.rmse},
          {"mape", number_or_null(r.mape, r.mape_defined)},
          {"mape_defined", r.mape_defined}};
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> target) {
  require_same(pred, target, "mae");
  CompensatedSum s;
  for (std::size_t i = 0; i < pred.size(); ++i) s.add(std::fabs(pred[i] - target[i]));
  return s.value() / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> target) {
  require_same(pred, target, "rmse");
  CompensatedSum s;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    s.add(e * e);
  }
  return std::sqrt(s.value() / static_cast<double>(pred.size()));
}

MapeResult mape(std::span<const double> pred, std::span<const double> target, double eps_mask) {
  require_same(pred, target, "mape");
  MapeResult r;
  CompensatedSum s;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = std::fabs(target[i]);
    if (t > eps_mask) {
      s.add(std::fabs(pred[i] - target[i]) / t);
      ++r.used;
    } else {
      ++r.masked;
    }
  }
  r.defined = r.used > 0;
  r.percent = r.defined ? 100.0 * s.value() / static_cast<double>(r.used)
                        : std::numeric_limits<double>::quiet_NaN();
  return r;
}

MetricsAccumulator::MetricsAccumulator(std::size_t forecast_len, double eps_mask)
    : forecast_len_(forecast_len),
      eps_(eps_mask),
      count_(forecast_len, 0),
      abs_sum_(forecast_len),
      sq_sum_(forecast_len),
      pct_sum_(forecast_len),
      pct_count_(forecast_len, 0),
      masked_(forecast_len, 0) {}

void MetricsAccumulator::add(std::span<const double> pred, std::span<const double> target,
                             std::size_t batch, std::size_t rest) {
  if (pred.size() != target.size() || pred.size() != batch * forecast_len_ * rest) {
    throw ShapeError("metrics: prediction/target layout does not match [B, F, N*C]");
  }
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < forecast_len_; ++h) {
      const std::size_t base = (b * forecast_len_ + h) * rest;
      for (std::size_t i = 0; i < rest; ++i) {
        const double p = pred[base + i];
        const double t = target[base + i];
        const double e = p - t;
        abs_sum_[h].add(std::fabs(e));
        sq_sum_[h].add(e * e);
        if (std::fabs(t) > eps_) {
          pct_sum_[h].add(std::fabs(e) / std::fabs(t));
          ++pct_count_[h];
        } else {
          ++masked_[h];
        }
      }
      count_[h] += rest;
    }
  }
  samples_ += batch;
}

MetricsReport MetricsAccumulator::finalize(std::span<const std::size_t> horizons) const {
  MetricsReport rep;
  rep.sample_count = samples_;
  for (std::size_t h = 0; h < forecast_len_; ++h) {
    if (count_[h] == 0) throw ContractError("metrics: no samples accumulated");
    const double n = static_cast<double>(count_[h]);
    rep.mae.push_back(abs_sum_[h].value() / n);
    rep.rmse.push_back(std::sqrt(sq_sum_[h].value() / n));
    const bool defined = pct_count_[h] > 0;
    rep.mape_defined.push_back(defined);
    rep.mape.push_back(defined ? 100.0 * pct_sum_[h].value() / static_cast<double>(pct_count_[h])
                               : std::numeric_limits<double>::quiet_NaN());
    rep.mape_mask_count += masked_[h];
  }
  auto row_at = [&](std::size_t h, std::string label) {
    return MetricRow{std::move(label), rep.mae[h], rep.rmse[h], rep.mape[h], rep.mape_defined[h]};
  };
  for (std::size_t hz : horizons) {
    if (hz < 1 || hz > forecast_len_) throw ConfigError("horizon exceeds forecast length");
    rep.horizon_rows.push_back(row_at(hz - 1, std::to_string(hz)));
  }
  CompensatedSum m, r, p;
  std::size_t defined = 0;
  for (std::size_t h = 0; h < forecast_len_; ++h) {
    m.add(rep.mae[h]);
    r.add(rep.rmse[h]);
    if (rep.mape_defined[h]) {
      p.add(rep.mape[h]);
      ++defined;
    }
  }
  const double f = static_cast<double>(forecast_len_);
  rep.average = {"average", m.value() / f, r.value() / f,
                 defined ? p.value() / static_cast<double>(defined)
                         : std::numeric_limits<double>::quiet_NaN(),
                 defined > 0};
  return rep;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per_step = nlohmann::json::array();
  for (std::size_t h = 0; h < r.mae.size(); ++h) {
    per_step.push_back({{"step", h + 1},
                        {"mae", r.mae[h]},
                        {"rmse", r.rmse[h]},
                        {"mape", number_or_null(r.mape[h], r.mape_defined[h])},
                        {"mape_defined", static_cast<bool>(r.mape_defined[h])}});
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.horizon_rows) rows.push_back(row_json(row));
  nlohmann::json j = {{"status", r.status},
                      {"per_step", per_step},
                      {"horizons", rows},
                      {"sample_count", r.sample_count},
                      {"mape_mask_count", r.mape_mask_count},
                      {"metadata", r.metadata}};
  if (r.status == "ok") j["average"] = row_json(r.average);
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

std::string to_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "horizon,mae,rmse,mape\n";
  if (r.status != "ok") {
    os << r.status << ",NaN,NaN,NaN\n";
    return os.str();
  }
  auto line = [&](const MetricRow& row) {
    os << row.label << ',' << fmt(row.mae) << ',' << fmt(row.rmse) << ','
       << (row.mape_defined ? fmt(row.mape) : std::string("NaN")) << '\n';
  };
  for (const auto& row : r.horizon_rows) line(row);
  line(r.average);
  return os.str();
}

}  // namespace eif
