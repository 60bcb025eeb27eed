#pragma once

#include <span>
#include <string>
#include <vector>

#include "eif/compute/parameter.hpp"
#include "eif/model/config.hpp"
#include "eif/model/layers.hpp"

namespace eif {

// A configured forecaster: history [B, T, N, C] in, forecast [B, F, N, C] out.
// Weights live in a named parameter registry; the layer structs hold handles
// into the same storage. Move-only, since copies would alias the weights.
// Variance floor of the optional per-window input standardization.
inline constexpr double kInstanceNormEps = 1e-5;

class ForecastModel {
 public:
  // Xavier-uniform weights, zero biases, unit layer-norm gains; frozen keys are
  // drawn from a normal distribution with variance 1/sqrt(D). Deterministic in
  // config.seed.
  explicit ForecastModel(const ModelConfig& config);

  ForecastModel(ForecastModel&&) = default;
  ForecastModel& operator=(ForecastModel&&) = default;
  ForecastModel(const ForecastModel&) = delete;
  ForecastModel& operator=(const ForecastModel&) = delete;

  const ModelConfig& config() const { return config_; }
  std::span<Parameter> parameters() { return params_; }
  std::span<const Parameter> parameters() const { return params_; }
  const Parameter* find(const std::string& name) const;
  Parameter* find(const std::string& name);
  std::size_t parameter_count() const { return count_elements(params_); }

  const LinearWeights& embedding() const { return embedding_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const LinearWeights& head() const { return head_; }

  Tensor forward(const Tensor& x) const { return forward(x, nullptr); }
  // When `captures` is given, appends the embedding output and the output of
  // every block, each [B, N, D]. The linear architecture captures only its
  // [B, N, F*C] output.
  Tensor forward(const Tensor& x, std::vector<Tensor>* captures) const;
  std::vector<std::string> capture_names() const;

  // Copies of every parameter buffer, in registry order.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  Tensor add_param(const std::string& name, Shape shape, bool trainable);

  ModelConfig config_;
  std::vector<Parameter> params_;
  LinearWeights embedding_;
  std::vector<Block> blocks_;
  LinearWeights head_;
};

inline ForecastModel init_model(const ModelConfig& config) { return ForecastModel(config); }

inline Tensor model_forward(const ForecastModel& model, const Tensor& x) {
  return model.forward(x);
}

// Predicted size in elements of the largest attention map for one forward
// pass over `batch` samples of `entities` entities.
std::size_t attention_map_elements(const ModelConfig& config, std::size_t batch,
                                   std::size_t entities);

}  // namespace eif
