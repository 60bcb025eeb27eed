#include "eif/compute/tape.hpp"

#include "eif/errors.hpp"

namespace eif {
namespace {
thread_local Tape* t_active = nullptr;
}

Tape* active_tape() { return t_active; }

TapeScope::TapeScope(Tape& tape) : previous_(t_active) { t_active = &tape; }

TapeScope::~TapeScope() { t_active = previous_; }

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    records_.clear();
    throw ContractError("backward on a loss that was not produced under a tape");
  }
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->backward();
  records_.clear();
}

}  // namespace eif
