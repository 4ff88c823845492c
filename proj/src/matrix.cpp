#include "alto/matrix.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <random>

namespace alto {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (auto& v : m.data()) v = dist(rng);
  return m;
}

double frobenius_norm(const Matrix& m) {
  double sum = 0.0;
  for (double v : m.data()) sum += v * v;
  return std::sqrt(sum);
}

double relative_difference(const Matrix& a, const Matrix& ref) {
  if (a.rows() != ref.rows() || a.cols() != ref.cols()) return INFINITY;
  double diff = 0.0;
  double base = 0.0;
  auto x = a.data();
  auto y = ref.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    diff += (x[i] - y[i]) * (x[i] - y[i]);
    base += y[i] * y[i];
  }
  return base > 0.0 ? std::sqrt(diff / base) : std::sqrt(diff);
}

void write_csv(std::ostream& out, const Matrix& m) {
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), m(i, j));
      out.write(buf, end - buf);
    }
    out << '\n';
  }
}

}  // namespace alto
