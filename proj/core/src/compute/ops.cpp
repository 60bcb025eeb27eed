#include "eif/compute/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "eif/compute/tape.hpp"
#include "eif/errors.hpp"

namespace eif::ops {
namespace {

using Storage = std::shared_ptr<TensorStorage>;

bool tracking(std::initializer_list<const Tensor*> inputs) {
  if (active_tape() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make_output(Shape shape, std::vector<double> data, bool track) {
  Tensor out(std::move(shape), std::move(data));
  if (track) out.set_requires_grad(true);
  return out;
}

std::span<double> grad_of(const Storage& s) {
  if (s->grad.empty()) s->grad.assign(s->data.size(), 0.0);
  return s->grad;
}

// Row-major strides with zero stride for broadcast axes of `in` viewed at the
// rank of `out`.
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  const std::size_t offset = out.size() - in.size();
  for (std::size_t i = in.size(); i-- > 0;) {
    strides[offset + i] = in[i] == 1 ? 0 : stride;
    stride *= in[i];
  }
  return strides;
}

// Flat offsets into `in` for every element of `out` under broadcasting.
std::vector<std::size_t> broadcast_offsets(const Shape& in, const Shape& out) {
  const auto strides = broadcast_strides(in, out);
  const std::size_t n = shape_size(out);
  std::vector<std::size_t> offsets(n);
  std::vector<std::size_t> counter(out.size(), 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    offsets[flat] = off;
    for (std::size_t axis = out.size(); axis-- > 0;) {
      ++counter[axis];
      off += strides[axis];
      if (counter[axis] < out[axis]) break;
      off -= strides[axis] * counter[axis];
      counter[axis] = 0;
    }
  }
  return offsets;
}

enum class BinaryKind { kAdd, kSub, kMul };

Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind) {
  const Shape out_shape = broadcast_shape(a.shape(), b.shape());
  const std::size_t n = shape_size(out_shape);
  const bool same_a = a.shape() == out_shape;
  const bool same_b = b.shape() == out_shape;
  std::vector<std::size_t> off_a, off_b;
  if (!same_a) off_a = broadcast_offsets(a.shape(), out_shape);
  if (!same_b) off_b = broadcast_offsets(b.shape(), out_shape);
  auto ia = [&](std::size_t i) { return same_a ? i : off_a[i]; };
  auto ib = [&](std::size_t i) { return same_b ? i : off_b[i]; };

  const auto& da = a.data();
  const auto& db = b.data();
  std::vector<double> out(n);
  switch (kind) {
    case BinaryKind::kAdd:
      for (std::size_t i = 0; i < n; ++i) out[i] = da[ia(i)] + db[ib(i)];
      break;
    case BinaryKind::kSub:
      for (std::size_t i = 0; i < n; ++i) out[i] = da[ia(i)] - db[ib(i)];
      break;
    case BinaryKind::kMul:
      for (std::size_t i = 0; i < n; ++i) out[i] = da[ia(i)] * db[ib(i)];
      break;
  }
  const bool track = tracking({&a, &b});
  Tensor result = make_output(out_shape, std::move(out), track);
  if (track) {
    Storage sa = a.storage(), sb = b.storage(), so = result.storage();
    active_tape()->record("binary", [sa, sb, so, kind, n, off_a = std::move(off_a),
                                     off_b = std::move(off_b)]() {
      if (so->grad.empty()) return;
      const auto& g = so->grad;
      auto ia = [&](std::size_t i) { return off_a.empty() ? i : off_a[i]; };
      auto ib = [&](std::size_t i) { return off_b.empty() ? i : off_b[i]; };
      if (sa->requires_grad) {
        auto ga = grad_of(sa);
        if (kind == BinaryKind::kMul) {
          for (std::size_t i = 0; i < n; ++i) ga[ia(i)] += g[i] * sb->data[ib(i)];
        } else {
          for (std::size_t i = 0; i < n; ++i) ga[ia(i)] += g[i];
        }
      }
      if (sb->requires_grad) {
        auto gb = grad_of(sb);
        if (kind == BinaryKind::kMul) {
          for (std::size_t i = 0; i < n; ++i) gb[ib(i)] += g[i] * sa->data[ia(i)];
        } else if (kind == BinaryKind::kSub) {
          for (std::size_t i = 0; i < n; ++i) gb[ib(i)] -= g[i];
        } else {
          for (std::size_t i = 0; i < n; ++i) gb[ib(i)] += g[i];
        }
      }
    });
  }
  return result;
}

// Unary elementwise op with derivative computed from (input, output).
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, const char* name, Fwd fwd, Deriv deriv) {
  const auto& dx = x.data();
  std::vector<double> out(dx.size());
  for (std::size_t i = 0; i < dx.size(); ++i) out[i] = fwd(dx[i]);
  const bool track = tracking({&x});
  Tensor result = make_output(x.shape(), std::move(out), track);
  if (track) {
    Storage sx = x.storage(), so = result.storage();
    active_tape()->record(name, [sx, so, deriv]() {
      if (so->grad.empty()) return;
      auto gx = grad_of(sx);
      for (std::size_t i = 0; i < gx.size(); ++i) {
        gx[i] += so->grad[i] * deriv(sx->data[i], so->data[i]);
      }
    });
  }
  return result;
}

// C[I,K] += A[I,J] B[J,K]
void kernel_nn(const double* a, const double* b, double* c, std::size_t I, std::size_t J,
               std::size_t K) {
  for (std::size_t i = 0; i < I; ++i) {
    double* crow = c + i * K;
    const double* arow = a + i * J;
    for (std::size_t j = 0; j < J; ++j) {
      const double av = arow[j];
      if (av == 0.0) continue;
      const double* brow = b + j * K;
      for (std::size_t k = 0; k < K; ++k) crow[k] += av * brow[k];
    }
  }
}

// C[I,K] += A[I,J] B[K,J]^T
void kernel_nt(const double* a, const double* b, double* c, std::size_t I, std::size_t J,
               std::size_t K) {
  for (std::size_t i = 0; i < I; ++i) {
    const double* arow = a + i * J;
    double* crow = c + i * K;
    for (std::size_t k = 0; k < K; ++k) {
      const double* brow = b + k * J;
      double acc = 0.0;
      for (std::size_t j = 0; j < J; ++j) acc += arow[j] * brow[j];
      crow[k] += acc;
    }
  }
}

// C[J,K] += A[I,J]^T B[I,K]
void kernel_tn(const double* a, const double* b, double* c, std::size_t I, std::size_t J,
               std::size_t K) {
  for (std::size_t i = 0; i < I; ++i) {
    const double* arow = a + i * J;
    const double* brow = b + i * K;
    for (std::size_t j = 0; j < J; ++j) {
      const double av = arow[j];
      if (av == 0.0) continue;
      double* crow = c + j * K;
      for (std::size_t k = 0; k < K; ++k) crow[k] += av * brow[k];
    }
  }
}

struct MatmulPlan {
  Shape out_shape;
  std::size_t I = 0, J = 0, K = 0;
  std::vector<std::size_t> a_off, b_off;  // per output batch, in elements
};

// transposed_b: b is [..., K, J] instead of [..., J, K].
MatmulPlan plan_matmul(const Tensor& a, const Tensor& b, bool transposed_b, const char* name) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) {
    throw ShapeError(std::string(name) + ": operands must have rank >= 2, got " +
                     shape_string(sa) + " and " + shape_string(sb));
  }
  MatmulPlan p;
  const std::size_t bj = transposed_b ? sb[sb.size() - 1] : sb[sb.size() - 2];
  p.K = transposed_b ? sb[sb.size() - 2] : sb[sb.size() - 1];
  p.J = sa[sa.size() - 1];
  p.I = sa[sa.size() - 2];
  if (p.J != bj) {
    throw ShapeError(std::string(name) + ": inner dimensions differ for " + shape_string(sa) +
                     " and " + shape_string(sb));
  }
  Shape batch_a(sa.begin(), sa.end() - 2);
  Shape batch_b(sb.begin(), sb.end() - 2);
  // A plain 2-D right operand lets every leading dim of a fold into I.
  if (batch_b.empty() && !batch_a.empty()) {
    p.I = shape_size(sa) / p.J;
    p.out_shape = sa;
    p.out_shape.back() = p.K;
    p.a_off = {0};
    p.b_off = {0};
    return p;
  }
  Shape batch_out;
  try {
    batch_out = broadcast_shape(batch_a, batch_b);
  } catch (const ShapeError&) {
    throw ShapeError(std::string(name) + ": batch dimensions not broadcastable for " +
                     shape_string(sa) + " and " + shape_string(sb));
  }
  const std::size_t nb = shape_size(batch_out);
  if (batch_out.empty()) {
    p.a_off = {0};
    p.b_off = {0};
  } else {
    p.a_off = broadcast_offsets(batch_a, batch_out);
    p.b_off = broadcast_offsets(batch_b, batch_out);
    for (auto& o : p.a_off) o *= p.I * p.J;
    for (auto& o : p.b_off) o *= p.J * p.K;
  }
  (void)nb;
  p.out_shape = batch_out;
  p.out_shape.push_back(p.I);
  p.out_shape.push_back(p.K);
  return p;
}

Tensor matmul_impl(const Tensor& a, const Tensor& b, bool transposed_b) {
  const char* name = transposed_b ? "matmul_transposed" : "matmul";
  MatmulPlan p = plan_matmul(a, b, transposed_b, name);
  const std::size_t nb = p.a_off.size();
  std::vector<double> out(shape_size(p.out_shape), 0.0);
  const double* da = a.data().data();
  const double* db = b.data().data();
  for (std::size_t bi = 0; bi < nb; ++bi) {
    double* c = out.data() + bi * p.I * p.K;
    if (transposed_b) {
      kernel_nt(da + p.a_off[bi], db + p.b_off[bi], c, p.I, p.J, p.K);
    } else {
      kernel_nn(da + p.a_off[bi], db + p.b_off[bi], c, p.I, p.J, p.K);
    }
  }
  const bool track = tracking({&a, &b});
  Tensor result = make_output(p.out_shape, std::move(out), track);
  if (track) {
    Storage sa = a.storage(), sb = b.storage(), so = result.storage();
    active_tape()->record(name, [sa, sb, so, p = std::move(p), transposed_b]() {
      if (so->grad.empty()) return;
      const std::size_t nb = p.a_off.size();
      const double* g = so->grad.data();
      if (sa->requires_grad) {
        double* ga = grad_of(sa).data();
        for (std::size_t bi = 0; bi < nb; ++bi) {
          const double* gc = g + bi * p.I * p.K;
          const double* bm = sb->data.data() + p.b_off[bi];
          if (transposed_b) {
            kernel_nn(gc, bm, ga + p.a_off[bi], p.I, p.K, p.J);
          } else {
            kernel_nt(gc, bm, ga + p.a_off[bi], p.I, p.K, p.J);
          }
        }
      }
      if (sb->requires_grad) {
        double* gb = grad_of(sb).data();
        for (std::size_t bi = 0; bi < nb; ++bi) {
          const double* gc = g + bi * p.I * p.K;
          const double* am = sa->data.data() + p.a_off[bi];
          if (transposed_b) {
            kernel_tn(gc, am, gb + p.b_off[bi], p.I, p.K, p.J);
          } else {
            kernel_tn(am, gc, gb + p.b_off[bi], p.I, p.J, p.K);
          }
        }
      }
    });
  }
  return result;
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("shapes " + shape_string(a) + " and " + shape_string(b) +
                       " are not broadcastable");
    }
    out[i] = da == 1 ? db : da;
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kAdd); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kSub); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kMul); }

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, "scale", [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor square(const Tensor& x) {
  return unary(
      x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor abs(const Tensor& x) {
  return unary(
      x, "abs", [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor exp(const Tensor& x) {
  return unary(
      x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input");
  }
  return unary(
      x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      x, "gelu", [&](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [inv_sqrt_2pi](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        return cdf + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const bool track = tracking({&x});
  Tensor result = make_output(Shape{}, {acc}, track);
  if (track) {
    Storage sx = x.storage(), so = result.storage();
    active_tape()->record("sum", [sx, so]() {
      if (so->grad.empty()) return;
      const double g = so->grad[0];
      for (double& gx : grad_of(sx)) gx += g;
    });
  }
  return result;
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor matmul(const Tensor& a, const Tensor& b) { return matmul_impl(a, b, false); }

Tensor matmul_transposed(const Tensor& a, const Tensor& b) { return matmul_impl(a, b, true); }

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                     shape_string(shape));
  }
  const auto src = x.data();
  const bool track = tracking({&x});
  Tensor result = make_output(std::move(shape), std::vector<double>(src.begin(), src.end()), track);
  if (track) {
    Storage sx = x.storage(), so = result.storage();
    active_tape()->record("reshape", [sx, so]() {
      if (so->grad.empty()) return;
      auto gx = grad_of(sx);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += so->grad[i];
    });
  }
  return result;
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const Shape& in = x.shape();
  if (axes.size() != in.size()) {
    throw ShapeError("permute: axis list length does not match rank of " + shape_string(in));
  }
  std::vector<bool> seen(in.size(), false);
  Shape out_shape(in.size());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] >= in.size() || seen[axes[i]]) throw ShapeError("permute: invalid axes");
    seen[axes[i]] = true;
    out_shape[i] = in[axes[i]];
  }
  // Strides of the input, gathered in output axis order.
  std::vector<std::size_t> in_strides(in.size());
  std::size_t stride = 1;
  for (std::size_t i = in.size(); i-- > 0;) {
    in_strides[i] = stride;
    stride *= in[i];
  }
  std::vector<std::size_t> gather(in.size());
  for (std::size_t i = 0; i < axes.size(); ++i) gather[i] = in_strides[axes[i]];

  const std::size_t n = x.size();
  std::vector<std::size_t> src_index(n);
  std::vector<std::size_t> counter(out_shape.size(), 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    src_index[flat] = off;
    for (std::size_t axis = out_shape.size(); axis-- > 0;) {
      ++counter[axis];
      off += gather[axis];
      if (counter[axis] < out_shape[axis]) break;
      off -= gather[axis] * counter[axis];
      counter[axis] = 0;
    }
  }
  const auto src = x.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = src[src_index[i]];
  const bool track = tracking({&x});
  Tensor result = make_output(out_shape, std::move(out), track);
  if (track) {
    Storage sx = x.storage(), so = result.storage();
    active_tape()->record("permute", [sx, so, src_index = std::move(src_index)]() {
      if (so->grad.empty()) return;
      auto gx = grad_of(sx);
      for (std::size_t i = 0; i < src_index.size(); ++i) gx[src_index[i]] += so->grad[i];
    });
  }
  return result;
}

Tensor softmax_rows(const Tensor& x) {
  if (x.rank() < 1) throw ShapeError("softmax_rows: input must have rank >= 1");
  const std::size_t cols = x.shape().back();
  if (cols == 0) throw ShapeError("softmax_rows: empty rows");
  const std::size_t rows = x.size() / cols;
  const auto src = x.data();
  std::vector<double> out(src.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = src.data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = in[0];
    for (std::size_t c = 0; c < cols; ++c) {
      if (std::isnan(in[c])) throw NumericError("softmax_rows: NaN input");
      mx = std::max(mx, in[c]);
    }
    if (!std::isfinite(mx)) throw NumericError("softmax_rows: non-finite input");
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(in[c] - mx);
      total += y[c];
    }
    const double inv = 1.0 / total;
    for (std::size_t c = 0; c < cols; ++c) y[c] *= inv;
  }
  const bool track = tracking({&x});
  Tensor result = make_output(x.shape(), std::move(out), track);
  if (track) {
    Storage sx = x.storage(), so = result.storage();
    active_tape()->record("softmax_rows", [sx, so, rows, cols]() {
      if (so->grad.empty()) return;
      auto gx = grad_of(sx);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = so->data.data() + r * cols;
        const double* gy = so->grad.data() + r * cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += gy[c] * y[c];
        double* g = gx.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) g[c] += y[c] * (gy[c] - dot);
      }
    });
  }
  return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() < 1) throw ShapeError("layer_norm: input must have rank >= 1");
  const std::size_t d = x.shape().back();
  if (d == 0) throw ShapeError("layer_norm: normalized dimension D must be >= 1");
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw ShapeError("layer_norm: gamma/beta shapes " + shape_string(gamma.shape()) + ", " +
                     shape_string(beta.shape()) + " do not match D=" + std::to_string(d));
  }
  if (eps < 0.0) throw ContractError("layer_norm: eps must be non-negative");
  const std::size_t rows = x.size() / d;
  const auto src = x.data();
  const auto g = gamma.data();
  const auto b = beta.data();
  std::vector<double> out(src.size());
  std::vector<double> xhat(src.size());
  std::vector<double> inv_std(rows);
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = src.data() + r * d;
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += in[c];
    mu *= inv_d;
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (in[c] - mu) * (in[c] - mu);
    var *= inv_d;
    const double denom = std::sqrt(var + eps);
    double* xh = xhat.data() + r * d;
    if (denom == 0.0) {
      // Constant row with eps = 0: every centered value is exactly zero.
      throw NumericError("layer_norm: zero variance with eps = 0");
    }
    inv_std[r] = 1.0 / denom;
    double* y = out.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      xh[c] = (in[c] - mu) * inv_std[r];
      y[c] = g[c] * xh[c] + b[c];
    }
  }
  const bool track = tracking({&x, &gamma, &beta});
  Tensor result = make_output(x.shape(), std::move(out), track);
  if (track) {
    Storage sx = x.storage(), sg = gamma.storage(), sb = beta.storage(), so = result.storage();
    active_tape()->record("layer_norm", [sx, sg, sb, so, rows, d, xhat = std::move(xhat),
                                         inv_std = std::move(inv_std)]() {
      if (so->grad.empty()) return;
      const double inv_d = 1.0 / static_cast<double>(d);
      std::span<double> gg, gb, gx;
      if (sg->requires_grad) gg = grad_of(sg);
      if (sb->requires_grad) gb = grad_of(sb);
      if (sx->requires_grad) gx = grad_of(sx);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gy = so->grad.data() + r * d;
        const double* xh = xhat.data() + r * d;
        if (!gg.empty()) {
          for (std::size_t c = 0; c < d; ++c) gg[c] += gy[c] * xh[c];
        }
        if (!gb.empty()) {
          for (std::size_t c = 0; c < d; ++c) gb[c] += gy[c];
        }
        if (!gx.empty()) {
          double mean_g = 0.0, mean_gx = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            const double gh = gy[c] * sg->data[c];
            mean_g += gh;
            mean_gx += gh * xh[c];
          }
          mean_g *= inv_d;
          mean_gx *= inv_d;
          double* out = gx.data() + r * d;
          for (std::size_t c = 0; c < d; ++c) {
            const double gh = gy[c] * sg->data[c];
            out[c] += inv_std[r] * (gh - mean_g - xh[c] * mean_gx);
          }
        }
      }
    });
  }
  return result;
}

Tensor mae_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("mae_loss: prediction " + shape_string(pred.shape()) + " vs target " +
                     shape_string(target.shape()));
  }
  return mean(abs(sub(pred, target)));
}

}  // namespace eif::ops
