#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eif/compute/parameter.hpp"

namespace eif {

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  // One buffer per parameter, sized on the first step.
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// Bias-corrected Adam update over trainable parameters, then zeroes every
// gradient. Throws ContractError if a trainable parameter has no gradient and
// NumericError on a non-finite gradient (before any parameter is modified).
void adam_step(std::span<Parameter> params, AdamState& state);

}  // namespace eif
