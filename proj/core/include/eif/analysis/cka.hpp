#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eif/compute/tensor.hpp"
#include "eif/model/model.hpp"

namespace eif {

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

// Per-layer activations, each flattened row-major from [samples, N, D] to
// [samples, N*D].
struct RepStack {
  std::vector<std::string> names;
  std::vector<Matrix> layers;
  std::size_t samples = 0;
};

// Captures the embedding and every block output for the [M, T, N, C] batch.
RepStack extract_representations(const ForecastModel& model, const Tensor& x);

// Linear kernel D * D^T.
Matrix gram(const Matrix& d);

// trace(H Cp H H Cq H) / (M - 1)^2 with H = I - 11^T / M.
double hsic(const Matrix& cp, const Matrix& cq);

struct CkaValue {
  double value = 0.0;
  bool degenerate = false;  // a self-HSIC was zero; value is 0
};

// Clamped to [0, 1].
CkaValue linear_cka(const Matrix& dp, const Matrix& dq);

struct CkaMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix scores;
  std::size_t degenerate_pairs = 0;
};

CkaMatrix cka_matrix(const RepStack& a, const RepStack& b);

std::string to_csv(const CkaMatrix& m);
// Binary greyscale PGM; each cell is a `cell`-pixel square, white = 1.
void write_heatmap_pgm(const CkaMatrix& m, const std::filesystem::path& path,
                       std::size_t cell = 24);

}  // namespace eif
