#ifndef ALTO_MATRIX_HPP_
#define ALTO_MATRIX_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace alto {

// Dense row-major matrix of doubles. Rows of a factor matrix are
// contiguous, so the rank loop walks memory sequentially.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// One factor per mode: rows = I_n, cols = rank R.
using FactorMatrix = Matrix;

// Uniform [0,1) entries.
Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

double frobenius_norm(const Matrix& m);

// ||a - ref||_F / ||ref||_F, or the absolute difference when ref is zero.
double relative_difference(const Matrix& a, const Matrix& ref);

// Plain CSV, one row per line.
void write_csv(std::ostream& out, const Matrix& m);

}  // namespace alto

#endif  // ALTO_MATRIX_HPP_
