#include "alto/cpd.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "alto/mttkrp.hpp"

namespace alto {

const char* to_string(MttkrpBackend b) {
  switch (b) {
    case MttkrpBackend::Oracle: return "oracle";
    case MttkrpBackend::Sequential: return "seq";
    case MttkrpBackend::Parallel: return "parallel";
  }
  return "?";
}

MttkrpFn make_mttkrp(const AnyAltoTensor& any, const CpdOptions& options) {
  switch (options.backend) {
    case MttkrpBackend::Oracle: {
      auto coo = std::make_shared<const CooTensor>(to_coo(any));
      return [coo](std::span<const FactorMatrix> f, std::size_t mode) {
        return mttkrp_oracle(*coo, f, mode);
      };
    }
    case MttkrpBackend::Sequential:
      return std::visit(
          [](const auto& a) -> MttkrpFn {
            auto t = std::make_shared<const std::decay_t<decltype(a)>>(a);
            return [t](std::span<const FactorMatrix> f, std::size_t mode) {
              return mttkrp_seq(*t, f, mode);
            };
          },
          any);
    case MttkrpBackend::Parallel:
      return std::visit(
          [&](const auto& a) -> MttkrpFn {
            using Index = typename std::decay_t<decltype(a.indices)>::value_type;
            auto engine = std::make_shared<const MttkrpEngine<Index>>(
                a, options.workers, options.partitions, options.strategy);
            return [engine](std::span<const FactorMatrix> f, std::size_t mode) {
              return (*engine)(f, mode);
            };
          },
          any);
  }
  throw ShapeError("unknown MTTKRP backend");
}

Matrix gram(const FactorMatrix& f) {
  const std::size_t rank = f.cols();
  Matrix g(rank, rank);
  for (std::size_t i = 0; i < f.rows(); ++i) {
    auto row = f.row(i);
    for (std::size_t p = 0; p < rank; ++p) {
      for (std::size_t q = p; q < rank; ++q) g(p, q) += row[p] * row[q];
    }
  }
  for (std::size_t p = 0; p < rank; ++p) {
    for (std::size_t q = 0; q < p; ++q) g(p, q) = g(q, p);
  }
  return g;
}

Matrix hadamard_except(std::span<const Matrix> grams, std::size_t skip) {
  const std::size_t rank = grams.front().rows();
  Matrix v(rank, rank, 1.0);
  for (std::size_t n = 0; n < grams.size(); ++n) {
    if (n == skip) continue;
    auto src = grams[n].data();
    auto dst = v.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= src[i];
  }
  return v;
}

Matrix solve_normal_equations(const Matrix& rhs, const Matrix& v) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto rank = static_cast<Eigen::Index>(v.rows());
  Eigen::Map<const RowMajor> vmap(v.data().data(), rank, rank);

  Eigen::LLT<Eigen::MatrixXd> llt(vmap);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd shifted = vmap;
    shifted.diagonal().array() += 1e-12 * vmap.trace() / static_cast<double>(rank);
    llt.compute(shifted);
    if (llt.info() != Eigen::Success) {
      throw SolveError("normal equations are singular even after regularization");
    }
  }

  // X V = B  <=>  V X^T = B^T (V symmetric).
  Matrix out(rhs.rows(), rhs.cols());
  Eigen::Map<const RowMajor> b(rhs.data().data(), static_cast<Eigen::Index>(rhs.rows()),
                               rank);
  Eigen::Map<RowMajor> x(out.data().data(), static_cast<Eigen::Index>(out.rows()), rank);
  x = llt.solve(b.transpose()).transpose();
  if (!x.allFinite()) throw SolveError("normal equation solve produced non-finite values");
  return out;
}

std::vector<double> normalize_columns(Matrix& m) {
  std::vector<double> norms(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t r = 0; r < m.cols(); ++r) norms[r] += m(i, r) * m(i, r);
  }
  for (auto& n : norms) n = std::sqrt(n);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t r = 0; r < m.cols(); ++r) {
      if (norms[r] > 0.0) m(i, r) /= norms[r];
    }
  }
  return norms;
}

FactorMatrix als_update(const MttkrpFn& mttkrp, CpModel& model, std::size_t mode) {
  FactorMatrix m = mttkrp(model.factors, mode);

  std::vector<Matrix> grams;
  grams.reserve(model.factors.size());
  for (std::size_t n = 0; n < model.factors.size(); ++n) {
    grams.push_back(n == mode ? Matrix(model.rank(), model.rank()) : gram(model.factors[n]));
  }
  Matrix v = hadamard_except(grams, mode);

  FactorMatrix updated = solve_normal_equations(m, v);
  model.lambda = normalize_columns(updated);
  model.factors[mode] = std::move(updated);
  return m;
}

template <typename Index>
FactorMatrix als_update(const AltoTensor<Index>& a, CpModel& model, std::size_t mode) {
  return als_update(
      [&a](std::span<const FactorMatrix> f, std::size_t n) { return mttkrp_seq(a, f, n); },
      model, mode);
}

double squared_norm(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return sum;
}

double fit(double norm_x_sq, const CpModel& model, const FactorMatrix& last_mttkrp,
           std::size_t last_mode) {
  const std::size_t rank = model.rank();

  // ||Xhat||^2 = lambda^T (G_1 * ... * G_N) lambda
  Matrix all(rank, rank, 1.0);
  for (const auto& f : model.factors) {
    Matrix g = gram(f);
    for (std::size_t i = 0; i < all.data().size(); ++i) all.data()[i] *= g.data()[i];
  }
  double model_sq = 0.0;
  for (std::size_t p = 0; p < rank; ++p) {
    for (std::size_t q = 0; q < rank; ++q) {
      model_sq += model.lambda[p] * model.lambda[q] * all(p, q);
    }
  }

  // <X, Xhat> = sum_r lambda_r <mttkrp(:, r), A_last(:, r)>
  const FactorMatrix& last = model.factors[last_mode];
  double inner = 0.0;
  for (std::size_t r = 0; r < rank; ++r) {
    double col = 0.0;
    for (std::size_t i = 0; i < last.rows(); ++i) col += last_mttkrp(i, r) * last(i, r);
    inner += model.lambda[r] * col;
  }

  const double residual_sq = std::max(0.0, norm_x_sq + model_sq - 2.0 * inner);
  if (norm_x_sq == 0.0) return residual_sq == 0.0 ? 1.0 : 0.0;
  return 1.0 - std::sqrt(residual_sq) / std::sqrt(norm_x_sq);
}

template <typename Index>
double fit(const AltoTensor<Index>& a, const CpModel& model, const FactorMatrix& last_mttkrp,
           std::size_t last_mode) {
  return fit(squared_norm(a.values), model, last_mttkrp, last_mode);
}

CpModel initial_model(std::span<const std::uint64_t> dims, std::size_t rank,
                      std::uint64_t seed) {
  if (rank < 1) throw ShapeError("rank must be at least 1");
  CpModel model;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (auto d : dims) {
    FactorMatrix f(d, rank);
    for (auto& v : f.data()) v = dist(rng);
    model.factors.push_back(std::move(f));
  }
  model.lambda.assign(rank, 1.0);
  return model;
}

CpModel cpd_als(const AnyAltoTensor& a, const CpdOptions& options) {
  const AltoLayout& layout = layout_of(a);
  const std::size_t order = layout.order();
  CpModel model = initial_model(layout.dims, options.rank, options.seed);
  MttkrpFn mttkrp = make_mttkrp(a, options);
  const double norm_x_sq =
      std::visit([](const auto& t) { return squared_norm(t.values); }, a);

  const std::size_t last = order - 1;
  model.fit_history.push_back(fit(norm_x_sq, model, mttkrp(model.factors, last), last));

  for (std::size_t it = 0; it < options.max_iters; ++it) {
    FactorMatrix m;
    for (std::size_t n = 0; n < order; ++n) m = als_update(mttkrp, model, n);
    const double f = fit(norm_x_sq, model, m, last);
    const double prev = model.fit_history.back();
    model.fit_history.push_back(f);
    model.iterations = it + 1;
    if (std::abs(f - prev) < options.tol) break;
  }
  return model;
}

template FactorMatrix als_update(const AltoTensor<std::uint64_t>&, CpModel&, std::size_t);
template FactorMatrix als_update(const AltoTensor<u128>&, CpModel&, std::size_t);
template double fit(const AltoTensor<std::uint64_t>&, const CpModel&, const FactorMatrix&,
                    std::size_t);
template double fit(const AltoTensor<u128>&, const CpModel&, const FactorMatrix&,
                    std::size_t);

}  // namespace alto
