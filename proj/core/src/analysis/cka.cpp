#include "eif/analysis/cka.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eif/errors.hpp"
#include "eif/util/binary_io.hpp"

namespace eif {
namespace {

Matrix flatten(const Tensor& t) {
  Matrix m(t.dim(0), t.size() / t.dim(0));
  auto src = t.data();
  std::copy(src.begin(), src.end(), m.values.begin());
  return m;
}

// H C H computed as C minus row means minus column means plus the grand mean.
Matrix center(const Matrix& c) {
  const std::size_t m = c.rows;
  std::vector<double> row(m, 0.0), col(m, 0.0);
  double all = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      row[i] += c(i, j);
      col[j] += c(i, j);
    }
  }
  for (std::size_t i = 0; i < m; ++i) all += row[i];
  const double inv = 1.0 / static_cast<double>(m);
  Matrix out(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out(i, j) = c(i, j) - row[i] * inv - col[j] * inv + all * inv * inv;
    }
  }
  return out;
}

void check_gram(const Matrix& c, const char* which) {
  if (c.rows != c.cols) throw ShapeError(std::string(which) + " Gram matrix is not square");
  if (c.rows < 2) throw DegenerateError("HSIC needs at least two samples");
  for (std::size_t i = 0; i < c.rows; ++i) {
    for (std::size_t j = i + 1; j < c.rows; ++j) {
      if (std::fabs(c(i, j) - c(j, i)) > 1e-9) {
        throw ContractError(std::string(which) + " Gram matrix is not symmetric");
      }
    }
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

RepStack extract_representations(const ForecastModel& model, const Tensor& x) {
  std::vector<Tensor> captures;
  model.forward(x, &captures);
  RepStack stack;
  stack.names = model.capture_names();
  stack.samples = x.dim(0);
  for (const Tensor& t : captures) stack.layers.push_back(flatten(t));
  return stack;
}

Matrix gram(const Matrix& d) {
  Matrix g(d.rows, d.rows);
  for (std::size_t i = 0; i < d.rows; ++i) {
    const double* a = d.values.data() + i * d.cols;
    for (std::size_t j = i; j < d.rows; ++j) {
      const double* b = d.values.data() + j * d.cols;
      double s = 0.0;
      for (std::size_t k = 0; k < d.cols; ++k) s += a[k] * b[k];
      g(i, j) = s;
      g(j, i) = s;
    }
  }
  return g;
}

double hsic(const Matrix& cp, const Matrix& cq) {
  check_gram(cp, "first");
  check_gram(cq, "second");
  if (cp.rows != cq.rows) throw ContractError("HSIC inputs have different sample counts");
  const Matrix a = center(cp);
  const Matrix b = center(cq);
  // trace(A B) for symmetric A, B is the elementwise inner product.
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  const double m1 = static_cast<double>(cp.rows - 1);
  return s / (m1 * m1);
}

CkaValue linear_cka(const Matrix& dp, const Matrix& dq) {
  if (dp.rows != dq.rows) {
    throw ContractError("CKA inputs have " + std::to_string(dp.rows) + " and " +
                        std::to_string(dq.rows) + " samples");
  }
  const Matrix cp = gram(dp);
  const Matrix cq = gram(dq);
  const double pp = hsic(cp, cp);
  const double qq = hsic(cq, cq);
  const double denom = std::sqrt(pp * qq);
  if (!(denom > 0.0) || !std::isfinite(denom)) return {0.0, true};
  const double v = hsic(cp, cq) / denom;
  return {std::clamp(v, 0.0, 1.0), false};
}

CkaMatrix cka_matrix(const RepStack& a, const RepStack& b) {
  if (a.samples != b.samples) {
    throw ContractError("representation stacks have " + std::to_string(a.samples) + " and " +
                        std::to_string(b.samples) + " samples");
  }
  CkaMatrix out;
  out.row_labels = a.names;
  out.col_labels = b.names;
  out.scores = Matrix(a.layers.size(), b.layers.size());
  // Each layer's centered Gram is reused across the whole row or column.
  auto centered = [](const RepStack& s) {
    std::vector<Matrix> cs;
    std::vector<double> self;
    for (const Matrix& d : s.layers) {
      Matrix g = gram(d);
      check_gram(g, "layer");
      cs.push_back(center(g));
      double v = 0.0;
      for (double x : cs.back().values) v += x * x;
      self.push_back(v);
    }
    return std::pair{cs, self};
  };
  const auto [ca, sa] = centered(a);
  const auto [cb, sb] = centered(b);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    for (std::size_t j = 0; j < cb.size(); ++j) {
      const double denom = std::sqrt(sa[i] * sb[j]);
      if (!(denom > 0.0)) {
        out.scores(i, j) = 0.0;
        ++out.degenerate_pairs;
        continue;
      }
      double s = 0.0;
      for (std::size_t k = 0; k < ca[i].values.size(); ++k) s += ca[i].values[k] * cb[j].values[k];
      out.scores(i, j) = std::clamp(s / denom, 0.0, 1.0);
    }
  }
  return out;
}

std::string to_csv(const CkaMatrix& m) {
  std::string out = "layer";
  for (const auto& c : m.col_labels) out += "," + csv_field(c);
  out += "\n";
  char buf[32];
  for (std::size_t i = 0; i < m.scores.rows; ++i) {
    out += csv_field(m.row_labels[i]);
    for (std::size_t j = 0; j < m.scores.cols; ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", m.scores(i, j));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void write_heatmap_pgm(const CkaMatrix& m, const std::filesystem::path& path, std::size_t cell) {
  const std::size_t w = m.scores.cols * cell, h = m.scores.rows * cell;
  std::string img = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double v = std::clamp(m.scores(y / cell, x / cell), 0.0, 1.0);
      img += static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  write_file(path, img);
}

}  // namespace eif
