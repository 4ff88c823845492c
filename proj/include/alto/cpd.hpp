#ifndef ALTO_CPD_HPP_
#define ALTO_CPD_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "alto/alto_tensor.hpp"
#include "alto/matrix.hpp"

namespace alto {

// Kruskal model: X ~ sum_r lambda_r * a_r^(1) o ... o a_r^(N).
struct CpModel {
  std::vector<FactorMatrix> factors;
  std::vector<double> lambda;
  // fit_history[0] is the fit of the initial model, then one entry per
  // iteration.
  std::vector<double> fit_history;
  std::size_t iterations = 0;

  std::size_t rank() const { return lambda.size(); }
};

enum class MttkrpBackend { Oracle, Sequential, Parallel };

const char* to_string(MttkrpBackend b);

struct CpdOptions {
  std::size_t rank = 16;
  std::size_t max_iters = 100;
  double tol = 1e-5;
  std::uint64_t seed = 0;
  MttkrpBackend backend = MttkrpBackend::Parallel;
  unsigned workers = 1;
  std::size_t partitions = 0;  // 0: one per worker
  std::optional<Strategy> strategy;  // unset: pick per mode from fiber reuse
};

using MttkrpFn =
    std::function<FactorMatrix(std::span<const FactorMatrix> factors, std::size_t mode)>;

MttkrpFn make_mttkrp(const AnyAltoTensor& a, const CpdOptions& options);

// F^T F.
Matrix gram(const FactorMatrix& f);

// Entrywise product of all grams except grams[skip].
Matrix hadamard_except(std::span<const Matrix> grams, std::size_t skip);

// Solves X * V = rhs for X with V symmetric positive definite. On a failed
// Cholesky factorization the diagonal is shifted by 1e-12 * trace(V) / R
// once before giving up with SolveError.
Matrix solve_normal_equations(const Matrix& rhs, const Matrix& v);

// Scales every column to unit 2-norm and returns the norms. Zero columns
// are left as they are with a zero weight.
std::vector<double> normalize_columns(Matrix& m);

// One ALS step for `mode`: replaces that factor and lambda. Returns the
// MTTKRP result the step solved against.
FactorMatrix als_update(const MttkrpFn& mttkrp, CpModel& model, std::size_t mode);

template <typename Index>
FactorMatrix als_update(const AltoTensor<Index>& a, CpModel& model, std::size_t mode);

// 1 - ||X - Xhat|| / ||X|| without forming Xhat. `last_mttkrp` is the MTTKRP
// for `last_mode` computed from the model's other factors, and the model's
// factor for that mode is the one solved against it.
double fit(double norm_x_sq, const CpModel& model, const FactorMatrix& last_mttkrp,
           std::size_t last_mode);

template <typename Index>
double fit(const AltoTensor<Index>& a, const CpModel& model,
           const FactorMatrix& last_mttkrp, std::size_t last_mode);

double squared_norm(std::span<const double> values);

// Uniform [0,1) factors from `seed`, unit weights.
CpModel initial_model(std::span<const std::uint64_t> dims, std::size_t rank,
                      std::uint64_t seed);

CpModel cpd_als(const AnyAltoTensor& a, const CpdOptions& options);

}  // namespace alto

#endif  // ALTO_CPD_HPP_
