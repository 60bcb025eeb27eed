#include "eif/compute/parameter.hpp"

#include <cmath>

namespace eif {

Parameter::Parameter(std::string name, Tensor value, bool trainable)
    : name_(std::move(name)), tensor_(std::move(value)), trainable_(trainable) {
  tensor_.set_requires_grad(trainable_);
  tensor_.mutable_grad();
}

void zero_grads(std::span<Parameter> params) {
  for (auto& p : params) p.tensor().zero_grad();
}

double grad_norm(std::span<const Parameter> params) {
  double total = 0.0;
  for (const auto& p : params) {
    if (!p.trainable() || !p.tensor().has_grad()) continue;
    for (double g : p.tensor().grad()) total += g * g;
  }
  return std::sqrt(total);
}

double clip_grad_norm(std::span<Parameter> params, double max_norm) {
  const double norm = grad_norm(params);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& p : params) {
      if (!p.trainable()) continue;
      for (double& g : p.tensor().mutable_grad()) g *= factor;
    }
  }
  return norm;
}

std::size_t count_elements(std::span<const Parameter> params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor().size();
  return n;
}

}  // namespace eif
