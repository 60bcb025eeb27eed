#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "eif/compute/parameter.hpp"

namespace eif {

struct GradCheckOptions {
  double h = 1e-5;
  // Coordinates checked per parameter; 0 checks all of them.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
};

// Compares tape gradients of the scalar `loss_fn` against central differences
// on trainable parameters. Relative error is |analytic - numeric| /
// max(1, |numeric|). Throws OracleError if two unperturbed evaluations differ.
GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::span<Parameter> params,
                           const GradCheckOptions& options = {});

}  // namespace eif
