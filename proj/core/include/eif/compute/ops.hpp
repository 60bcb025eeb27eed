#pragma once

#include <cstddef>
#include <vector>

#include "eif/compute/tensor.hpp"

// Differentiable tensor operations. Each op records a backward closure on the
// thread's active tape when at least one input requires a gradient.
namespace eif::ops {

// Elementwise with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);
Tensor square(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
// Exact GELU, 0.5 x (1 + erf(x / sqrt 2)).
Tensor gelu(const Tensor& x);

// Reductions to a rank-0 tensor.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// a[..., I, J] x b[..., J, K] -> [..., I, K]; batch dims broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);
// a[..., I, J] x b[..., K, J]^T -> [..., I, K].
Tensor matmul_transposed(const Tensor& a, const Tensor& b);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);

// Softmax over the last axis with row-max subtraction.
Tensor softmax_rows(const Tensor& x);

// Normalizes over the last axis (population variance), then gamma * x + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// mean(|pred - target|)
Tensor mae_loss(const Tensor& pred, const Tensor& target);

Shape broadcast_shape(const Shape& a, const Shape& b);

}  // namespace eif::ops
