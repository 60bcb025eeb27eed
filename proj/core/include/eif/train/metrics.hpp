#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace eif {

// Neumaier compensated sum; merge() makes partial sums order-insensitive to
// within rounding of the compensation term.
class CompensatedSum {
 public:
  void add(double x);
  void merge(const CompensatedSum& other);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline constexpr double kMapeMaskEps = 1e-4;

struct MapeResult {
  double percent = 0.0;
  bool defined = false;
  std::size_t used = 0;
  std::size_t masked = 0;  // targets with |t| <= eps, excluded
};

double mae(std::span<const double> pred, std::span<const double> target);
double rmse(std::span<const double> pred, std::span<const double> target);
MapeResult mape(std::span<const double> pred, std::span<const double> target,
                double eps_mask = kMapeMaskEps);

struct MetricRow {
  std::string label;  // horizon number or "average"
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
  bool mape_defined = false;
};

struct MetricsReport {
  std::vector<double> mae;  // per forecast step, length F
  std::vector<double> rmse;
  std::vector<double> mape;
  std::vector<bool> mape_defined;
  std::vector<MetricRow> horizon_rows;
  MetricRow average;
  std::size_t sample_count = 0;  // windows evaluated
  std::size_t mape_mask_count = 0;
  std::string status = "ok";
  std::string message;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json to_json(const MetricsReport& report);
// Header "horizon,mae,rmse,mape"; one row per selected horizon then "average".
std::string to_csv(const MetricsReport& report);

// Streams [B, F, N, C] predictions/targets in raw units into per-step sums.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(std::size_t forecast_len, double eps_mask = kMapeMaskEps);

  // pred/target laid out [B][F][rest]; `rest` = N * C.
  void add(std::span<const double> pred, std::span<const double> target, std::size_t batch,
           std::size_t rest);

  // horizons are 1-based steps <= F.
  MetricsReport finalize(std::span<const std::size_t> horizons) const;

 private:
  std::size_t forecast_len_;
  double eps_;
  std::size_t samples_ = 0;
  std::vector<std::size_t> count_;
  std::vector<CompensatedSum> abs_sum_, sq_sum_, pct_sum_;
  std::vector<std::size_t> pct_count_, masked_;
};

}  // namespace eif
