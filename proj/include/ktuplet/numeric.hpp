#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ktuplet {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Row-major is the single storage
// convention across the library.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> v);

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<double> row(std::size_t r) {
    return {values.data() + r * cols, cols};
  }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }

  Vec row_vec(std::size_t r) const {
    auto s = row(r);
    return Vec(s.begin(), s.end());
  }

  bool operator==(const Matrix& other) const = default;
};

// Threshold below which a vector is considered degenerate for
// normalization purposes.
inline constexpr double kNormEpsilon = 1e-12;

// Sum of squared coordinate differences, accumulated left to right.
double squared_euclidean(std::span<const double> u, std::span<const double> v);

double l2_norm(std::span<const double> v);

// Scales v to unit L2 norm. Throws DegenerateVectorError when the norm is
// below kNormEpsilon.
Vec l2_normalize(std::span<const double> v);

// out[i][j] = squared_euclidean(a.row(i), b.row(j)). Cells are computed by
// the scalar kernel, so they agree with it exactly.
Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b);

bool all_finite(std::span<const double> v);
bool all_finite(const Matrix& m);

}  // namespace ktuplet
