#include "ktuplet/numeric.hpp"

#include <cmath>

#include "ktuplet/errors.hpp"

namespace ktuplet {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != rows * cols) {
    throw DimensionError("Matrix: values length " +
                         std::to_string(values.size()) + " != " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

double squared_euclidean(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionError("squared_euclidean: length mismatch " +
                         std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double diff = u[j] - v[j];
    sum += diff * diff;
  }
  return sum;
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

Vec l2_normalize(std::span<const double> v) {
  const double norm = l2_norm(v);
  if (!(norm > kNormEpsilon)) {
    throw DegenerateVectorError("l2_normalize: norm " + std::to_string(norm) +
                                " below threshold");
  }
  Vec out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] / norm;
  return out;
}

Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) {
    throw DimensionError("pairwise_sq_dist: column mismatch " +
                         std::to_string(a.cols) + " vs " +
                         std::to_string(b.cols));
  }
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) {
      out.at(i, j) = squared_euclidean(a.row(i), b.row(j));
    }
  }
  return out;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool all_finite(const Matrix& m) { return all_finite(m.values); }

}  // namespace ktuplet
