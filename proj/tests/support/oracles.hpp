#pragma once

// Straight-line reference implementations used as test oracles. Written with
// explicit loops and no shared code with the library.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "eif/compute/tensor.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline Vec random_vec(std::size_t n, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vec v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

inline eif::Tensor random_tensor(eif::Shape shape, std::mt19937_64& gen, double lo = -1.0,
                                 double hi = 1.0) {
  const std::size_t n = eif::shape_size(shape);
  return eif::Tensor(std::move(shape), random_vec(n, gen, lo, hi));
}

// a [I x J] times b [J x K], row-major.
inline Vec matmul(const Vec& a, const Vec& b, std::size_t I, std::size_t J, std::size_t K) {
  Vec c(I * K, 0.0);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < J; ++j) s += a[i * J + j] * b[j * K + k];
      c[i * K + k] = s;
    }
  return c;
}

inline Vec softmax(const Vec& row) {
  double mx = row[0];
  for (double x : row) mx = std::max(mx, x);
  Vec out(row.size());
  double z = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) z += std::exp(row[i] - mx);
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = std::exp(row[i] - mx) / z;
  return out;
}

// Two-pass mean then variance.
inline Vec layer_norm_row(const Vec& x, const Vec& gamma, const Vec& beta, double eps) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = gamma[i] * (x[i] - mean) / std::sqrt(var + eps) + beta[i];
  }
  return out;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

// softmax((h W) K^T / sqrt(D)) V for one sample: h [N x D], W [D x D],
// K and V [M x D].
inline Vec latent_attention(const Vec& h, const Vec& W, const Vec& K, const Vec& V, std::size_t N,
                            std::size_t D, std::size_t M) {
  Vec out(N * D, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    Vec q(D, 0.0);
    for (std::size_t j = 0; j < D; ++j)
      for (std::size_t i = 0; i < D; ++i) q[j] += h[n * D + i] * W[i * D + j];
    Vec logits(M, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t j = 0; j < D; ++j) logits[m] += q[j] * K[m * D + j];
      logits[m] /= std::sqrt(static_cast<double>(D));
    }
    const Vec p = softmax(logits);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t j = 0; j < D; ++j) out[n * D + j] += p[m] * V[m * D + j];
  }
  return out;
}

// softmax((h Wq)(h Wk)^T / sqrt(D)) (h Wv) for one sample.
inline Vec variate_attention(const Vec& h, const Vec& Wq, const Vec& Wk, const Vec& Wv,
                             std::size_t N, std::size_t D) {
  const Vec q = matmul(h, Wq, N, D, D), k = matmul(h, Wk, N, D, D), v = matmul(h, Wv, N, D, D);
  Vec out(N * D, 0.0);
  for (std::size_t a = 0; a < N; ++a) {
    Vec logits(N, 0.0);
    for (std::size_t b = 0; b < N; ++b) {
      for (std::size_t j = 0; j < D; ++j) logits[b] += q[a * D + j] * k[b * D + j];
      logits[b] /= std::sqrt(static_cast<double>(D));
    }
    const Vec p = softmax(logits);
    for (std::size_t b = 0; b < N; ++b)
      for (std::size_t j = 0; j < D; ++j) out[a * D + j] += p[b] * v[b * D + j];
  }
  return out;
}

// GELU(W1 x + b1) W2 + b2 per row; W1 [D x H], W2 [H x D].
inline Vec mlp(const Vec& h, const Vec& W1, const Vec& b1, const Vec& W2, const Vec& b2,
               std::size_t N, std::size_t D, std::size_t H) {
  Vec out(N * D, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    Vec hidden(H, 0.0);
    for (std::size_t k = 0; k < H; ++k) {
      double s = b1[k];
      for (std::size_t i = 0; i < D; ++i) s += h[n * D + i] * W1[i * H + k];
      hidden[k] = gelu(s);
    }
    for (std::size_t j = 0; j < D; ++j) {
      double s = b2[j];
      for (std::size_t k = 0; k < H; ++k) s += hidden[k] * W2[k * D + j];
      out[n * D + j] = s;
    }
  }
  return out;
}

// trace(H Cp H H Cq H) / (M-1)^2 with H built explicitly.
inline double hsic(const Vec& cp, const Vec& cq, std::size_t M) {
  Vec H(M * M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) H[i * M + j] = (i == j ? 1.0 : 0.0) - 1.0 / double(M);
  const Vec a = matmul(matmul(H, cp, M, M, M), H, M, M, M);
  const Vec b = matmul(matmul(H, cq, M, M, M), H, M, M, M);
  const Vec ab = matmul(a, b, M, M, M);
  double tr = 0.0;
  for (std::size_t i = 0; i < M; ++i) tr += ab[i * M + i];
  return tr / ((double(M) - 1.0) * (double(M) - 1.0));
}

inline double mae(const Vec& p, const Vec& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - t[i]);
  return s / double(p.size());
}

inline double rmse(const Vec& p, const Vec& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
  return std::sqrt(s / double(p.size()));
}

// Percentage over |t| > eps; returns NaN when nothing survives the mask.
inline double mape(const Vec& p, const Vec& t, double eps, std::size_t* masked = nullptr) {
  double s = 0.0;
  std::size_t used = 0, skipped = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::fabs(t[i]) > eps) {
      s += std::fabs(p[i] - t[i]) / std::fabs(t[i]);
      ++used;
    } else {
      ++skipped;
    }
  }
  if (masked) *masked = skipped;
  return used ? 100.0 * s / double(used) : std::nan("");
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("eif_test_" + tag + "_" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
