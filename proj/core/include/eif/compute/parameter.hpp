#pragma once

#include <span>
#include <string>
#include <vector>

#include "eif/compute/tensor.hpp"

namespace eif {

// A named model weight. Frozen parameters (trainable == false) never join the
// tape, keep an all-zero gradient buffer, and are skipped by the optimizer.
class Parameter {
 public:
  Parameter(std::string name, Tensor value, bool trainable = true);

  const std::string& name() const { return name_; }
  bool trainable() const { return trainable_; }
  Tensor& tensor() { return tensor_; }
  const Tensor& tensor() const { return tensor_; }

 private:
  std::string name_;
  Tensor tensor_;
  bool trainable_;
};

void zero_grads(std::span<Parameter> params);

// Global L2 norm over the gradients of trainable parameters.
double grad_norm(std::span<const Parameter> params);

// Rescales gradients so their global norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(std::span<Parameter> params, double max_norm);

std::size_t count_elements(std::span<const Parameter> params);

}  // namespace eif
