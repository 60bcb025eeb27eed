#include "eif/compute/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "eif/compute/rng.hpp"
#include "eif/compute/tape.hpp"
#include "eif/errors.hpp"

namespace eif {

GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::span<Parameter> params,
                           const GradCheckOptions& options) {
  if (!(options.h > 0.0)) throw ContractError("grad_check: step h must be positive");

  const double base = loss_fn().item();
  const double again = loss_fn().item();
  if (base != again) {
    throw OracleError("grad_check: loss function is not deterministic");
  }

  zero_grads(params);
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = loss_fn();
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    auto g = p.tensor().has_grad() ? p.tensor().grad() : std::span<const double>{};
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(p.tensor().size(), 0.0);
  }
  zero_grads(params);

  Rng rng(options.seed);
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = params[pi];
    if (!p.trainable()) continue;
    const std::size_t n = p.tensor().size();
    std::vector<std::size_t> coords(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    if (options.max_coords_per_param > 0 && options.max_coords_per_param < n) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    auto w = p.tensor().mutable_data();
    for (std::size_t idx : coords) {
      const double orig = w[idx];
      w[idx] = orig + options.h;
      const double up = loss_fn().item();
      w[idx] = orig - options.h;
      const double down = loss_fn().item();
      w[idx] = orig;
      const double numeric = (up - down) / (2.0 * options.h);
      const double err =
          std::fabs(analytic[pi][idx] - numeric) / std::max(1.0, std::fabs(numeric));
      ++result.coords_checked;
      if (err > result.max_rel_error || result.worst_param.empty()) {
        if (err >= result.max_rel_error) {
          result.max_rel_error = err;
          result.worst_param = p.name();
          result.worst_index = idx;
        }
      }
    }
  }
  return result;
}

}  // namespace eif
