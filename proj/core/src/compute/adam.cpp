#include "eif/compute/adam.hpp"

#include <cmath>

#include "eif/errors.hpp"

namespace eif {

void adam_step(std::span<Parameter> params, AdamState& state) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].tensor().size(), 0.0);
      state.v[i].assign(params[i].tensor().size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw ContractError("adam_step: optimizer state was built for a different parameter list");
  }
  for (const auto& p : params) {
    if (!p.trainable()) continue;
    if (!p.tensor().has_grad()) {
      throw ContractError("adam_step: trainable parameter '" + p.name() + "' has no gradient");
    }
    for (double g : p.tensor().grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient in '" + p.name() + "'");
      }
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (!p.trainable()) continue;
    auto w = p.tensor().mutable_data();
    auto g = p.tensor().grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
  zero_grads(params);
}

}  // namespace eif
