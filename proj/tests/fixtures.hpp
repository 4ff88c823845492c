#ifndef ALTO_TESTS_FIXTURES_HPP_
#define ALTO_TESTS_FIXTURES_HPP_

// Shared test tensors and brute-force oracles. Nothing here calls the
// library's linearization or kernels.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "alto/common.hpp"
#include "alto/coo_tensor.hpp"
#include "alto/matrix.hpp"

namespace alto::testing {

// Six nonzeros in a 4x8x2 box. With L=2 the sorted order splits into
// segments [2-20] and [25-51] bounded by {[0-3],[0-3],[0-1]} and
// {[1-3],[2-6],[0-1]}. The two middle elements, (3,0,1) at 11 and (3,4,0)
// at 42, are the ones that make those bounds tight.
inline CooTensor fig5_tensor() {
  return make_coo({4, 8, 2},
                  {1, 0, 0,  //  2
                   3, 0, 1,  // 11
                   0, 3, 0,  // 20
                   2, 2, 1,  // 25
                   3, 4, 0,  // 42
                   1, 6, 1},  // 51
                  {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
}

inline const char* fig5_tns() {
  return "1 4 1 3.0\n"
         "2 1 1 1.0\n"
         "4 1 2 2.0\n"
         "3 3 2 4.0\n"
         "4 5 1 5.0\n"
         "2 7 2 6.0\n";
}

// Places bit g of each coordinate at the g-th lowest set position of its
// mask by scanning all 128 positions one at a time.
inline u128 deposit_oracle(const std::vector<u128>& masks,
                           const std::vector<std::uint64_t>& coords) {
  u128 out = 0;
  for (std::size_t n = 0; n < masks.size(); ++n) {
    unsigned g = 0;
    for (unsigned pos = 0; pos < 128; ++pos) {
      if (((masks[n] >> pos) & 1) == 0) continue;
      if ((coords[n] >> g) & 1) out |= u128{1} << pos;
      ++g;
    }
  }
  return out;
}

inline std::vector<std::uint64_t> gather_oracle(const std::vector<u128>& masks, u128 index) {
  std::vector<std::uint64_t> coords(masks.size(), 0);
  for (std::size_t n = 0; n < masks.size(); ++n) {
    unsigned g = 0;
    for (unsigned pos = 0; pos < 128; ++pos) {
      if (((masks[n] >> pos) & 1) == 0) continue;
      if ((index >> pos) & 1) coords[n] |= std::uint64_t{1} << g;
      ++g;
    }
  }
  return coords;
}

// Enumerates every coordinate of a box in row-major order.
template <typename Fn>
void for_each_coord(const std::vector<std::uint64_t>& dims, Fn&& fn) {
  std::vector<std::uint64_t> c(dims.size(), 0);
  while (true) {
    fn(c);
    std::size_t n = dims.size();
    while (n > 0) {
      --n;
      if (++c[n] < dims[n]) break;
      c[n] = 0;
      if (n == 0) return;
    }
  }
}

// Dense MTTKRP by direct summation over every cell of a dense tensor stored
// row-major (last mode fastest).
inline Matrix dense_mttkrp(const std::vector<std::uint64_t>& dims,
                           const std::vector<double>& dense,
                           const std::vector<Matrix>& factors, std::size_t mode) {
  const std::size_t rank = factors[0].cols();
  Matrix out(dims[mode], rank);
  std::size_t flat = 0;
  for_each_coord(dims, [&](const std::vector<std::uint64_t>& c) {
    const double v = dense[flat++];
    for (std::size_t r = 0; r < rank; ++r) {
      double term = v;
      for (std::size_t n = 0; n < dims.size(); ++n) {
        if (n != mode) term *= factors[n](c[n], r);
      }
      out(c[mode], r) += term;
    }
  });
  return out;
}

// Unit-norm columns from a standard normal draw.
inline Matrix unit_normal_factor(std::size_t rows, std::size_t rank, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Matrix m(rows, rank);
  for (std::size_t r = 0; r < rank; ++r) {
    double norm = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      m(i, r) = dist(rng);
      norm += m(i, r) * m(i, r);
    }
    for (std::size_t i = 0; i < rows; ++i) m(i, r) /= std::sqrt(norm);
  }
  return m;
}

// Dense tensor sum_r w_r a_r o b_r o c_r ... as a COO tensor (every cell).
inline CooTensor kruskal_tensor(const std::vector<std::uint64_t>& dims,
                                const std::vector<Matrix>& factors,
                                const std::vector<double>& weights) {
  std::vector<std::uint64_t> coords;
  std::vector<double> values;
  for_each_coord(dims, [&](const std::vector<std::uint64_t>& c) {
    double v = 0.0;
    for (std::size_t r = 0; r < weights.size(); ++r) {
      double term = weights[r];
      for (std::size_t n = 0; n < dims.size(); ++n) term *= factors[n](c[n], r);
      v += term;
    }
    coords.insert(coords.end(), c.begin(), c.end());
    values.push_back(v);
  });
  return make_coo(dims, std::move(coords), std::move(values));
}

}  // namespace alto::testing

#endif  // ALTO_TESTS_FIXTURES_HPP_
