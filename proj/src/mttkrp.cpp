#include "alto/mttkrp.hpp"

#include <atomic>
#include <string>

#include <omp.h>

namespace alto {

void check_factors(std::span<const std::uint64_t> dims,
                   std::span<const FactorMatrix> factors, std::size_t mode) {
  if (mode >= dims.size()) {
    throw ShapeError("mode " + std::to_string(mode + 1) + " out of range for order " +
                     std::to_string(dims.size()));
  }
  if (factors.size() != dims.size()) {
    throw ShapeError("expected one factor matrix per mode");
  }
  const std::size_t rank = factors[0].cols();
  for (std::size_t n = 0; n < dims.size(); ++n) {
    if (factors[n].rows() != dims[n]) {
      throw ShapeError("factor " + std::to_string(n + 1) + " has " +
                       std::to_string(factors[n].rows()) + " rows, expected " +
                       std::to_string(dims[n]));
    }
    if (factors[n].cols() != rank) throw ShapeError("factor ranks differ");
  }
  if (rank == 0) throw ShapeError("rank must be at least 1");
}

namespace {

// row[r] = val * prod_{n != mode} factors[n](coord_n, r)
template <typename CoordFn>
inline void khatri_rao_row(double val, std::span<const FactorMatrix> factors,
                           std::size_t mode, CoordFn&& coord, std::span<double> row) {
  const std::size_t rank = row.size();
  for (std::size_t r = 0; r < rank; ++r) row[r] = val;
  for (std::size_t n = 0; n < factors.size(); ++n) {
    if (n == mode) continue;
    const double* f = factors[n].row(coord(n)).data();
    for (std::size_t r = 0; r < rank; ++r) row[r] *= f[r];
  }
}

}  // namespace

FactorMatrix mttkrp_oracle(const CooTensor& t, std::span<const FactorMatrix> factors,
                           std::size_t mode) {
  check_factors(t.dims, factors, mode);
  const std::size_t rank = factors[0].cols();
  FactorMatrix out(t.dims[mode], rank);
  std::vector<double> row(rank);
  for (std::size_t e = 0; e < t.nnz(); ++e) {
    khatri_rao_row(t.values[e], factors, mode,
                   [&](std::size_t n) { return t.coord(e, n); }, row);
    auto dst = out.row(t.coord(e, mode));
    for (std::size_t r = 0; r < rank; ++r) dst[r] += row[r];
  }
  return out;
}

template <typename Index>
FactorMatrix mttkrp_seq(const AltoTensor<Index>& a, std::span<const FactorMatrix> factors,
                        std::size_t mode) {
  check_factors(a.layout.dims, factors, mode);
  const std::size_t rank = factors[0].cols();
  const auto& masks = a.layout.split;
  FactorMatrix out(a.layout.dims[mode], rank);
  std::vector<double> row(rank);
  for (std::size_t e = 0; e < a.nnz(); ++e) {
    const Index idx = a.indices[e];
    khatri_rao_row(a.values[e], factors, mode,
                   [&](std::size_t n) { return extract(idx, masks[n]); }, row);
    auto dst = out.row(extract(idx, masks[mode]));
    for (std::size_t r = 0; r < rank; ++r) dst[r] += row[r];
  }
  return out;
}

namespace {

void check_plan(std::size_t nnz, const PartitionSet& parts, const ConflictPlan& plan,
                std::size_t mode) {
  if (parts.nnz != nnz || parts.parts.empty() || parts.parts.back().end() != nnz) {
    throw ShapeError("partition set does not match the tensor");
  }
  if (plan.mode != mode || plan.overlaps.size() != parts.count()) {
    throw ShapeError("conflict plan does not match the mode or partitions");
  }
}

template <typename Index>
void accumulate_atomic(const AltoTensor<Index>& a, const PartitionSet& parts,
                       const ConflictPlan& plan, std::span<const FactorMatrix> factors,
                       std::size_t mode, unsigned workers, FactorMatrix& out) {
  const std::size_t rank = out.cols();
  const auto& masks = a.layout.split;

  // Flags are trusted only if they were applied for this mode, with the
  // plan's bit, against the same partition count.
  const auto& flags = a.flags[mode];
  const bool use_flags = plan.flag_bit && flags && flags->bit == *plan.flag_bit &&
                         flags->partitions == parts.count();
  const Index flag = use_flags ? Index{1} << flags->bit : Index{0};

  const auto num_parts = static_cast<std::ptrdiff_t>(parts.count());
#pragma omp parallel num_threads(workers)
  {
    std::vector<double> row(rank);
#pragma omp for schedule(static)
    for (std::ptrdiff_t l = 0; l < num_parts; ++l) {
      const auto& p = parts.parts[l];
      for (std::size_t e = p.begin; e < p.end(); ++e) {
        const Index idx = a.indices[e];
        khatri_rao_row(a.values[e], factors, mode,
                       [&](std::size_t n) { return extract(idx, masks[n]); }, row);
        double* dst = out.row(extract(idx, masks[mode])).data();
        if (use_flags && (idx & flag) == 0) {
          for (std::size_t r = 0; r < rank; ++r) dst[r] += row[r];
        } else {
          for (std::size_t r = 0; r < rank; ++r) {
            std::atomic_ref<double>(dst[r]).fetch_add(row[r], std::memory_order_relaxed);
          }
        }
      }
    }
  }
}

template <typename Index>
void accumulate_buffered(const AltoTensor<Index>& a, const PartitionSet& parts,
                         std::span<const FactorMatrix> factors, std::size_t mode,
                         unsigned workers, FactorMatrix& out) {
  const std::size_t rank = out.cols();
  const auto& masks = a.layout.split;
  const auto num_parts = static_cast<std::ptrdiff_t>(parts.count());
  std::vector<Matrix> staged(parts.count());

#pragma omp parallel num_threads(workers)
  {
    std::vector<double> row(rank);
#pragma omp for schedule(static)
    for (std::ptrdiff_t l = 0; l < num_parts; ++l) {
      const auto& p = parts.parts[l];
      const Interval span = p.intervals[mode];
      Matrix buf(span.length(), rank);
      for (std::size_t e = p.begin; e < p.end(); ++e) {
        const Index idx = a.indices[e];
        khatri_rao_row(a.values[e], factors, mode,
                       [&](std::size_t n) { return extract(idx, masks[n]); }, row);
        double* dst = buf.row(extract(idx, masks[mode]) - span.lo).data();
        for (std::size_t r = 0; r < rank; ++r) dst[r] += row[r];
      }
      staged[l] = std::move(buf);
    }

    // Pull: each output row is owned by one thread and reads every
    // partition whose interval covers it.
    const auto num_rows = static_cast<std::ptrdiff_t>(out.rows());
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < num_rows; ++b) {
      double* dst = out.row(b).data();
      for (std::ptrdiff_t l = 0; l < num_parts; ++l) {
        const Interval span = parts.parts[l].intervals[mode];
        const auto ub = static_cast<std::uint64_t>(b);
        if (!span.contains(ub)) continue;
        const double* src = staged[l].row(ub - span.lo).data();
        for (std::size_t r = 0; r < rank; ++r) dst[r] += src[r];
      }
    }
  }
}

}  // namespace

template <typename Index>
FactorMatrix mttkrp_par(const AltoTensor<Index>& a, const PartitionSet& parts,
                        const ConflictPlan& plan, std::span<const FactorMatrix> factors,
                        std::size_t mode, unsigned workers) {
  check_factors(a.layout.dims, factors, mode);
  check_plan(a.nnz(), parts, plan, mode);
  if (workers < 1) throw ShapeError("worker count must be at least 1");

  FactorMatrix out(a.layout.dims[mode], factors[0].cols());
  if (plan.strategy == Strategy::Buffered) {
    accumulate_buffered(a, parts, factors, mode, workers, out);
  } else {
    accumulate_atomic(a, parts, plan, factors, mode, workers, out);
  }
  return out;
}

template <typename Index>
MttkrpEngine<Index>::MttkrpEngine(const AltoTensor<Index>& a, unsigned workers,
                                  std::size_t num_parts, std::optional<Strategy> strategy)
    : flagged_(a), workers_(workers) {
  if (workers < 1) throw ShapeError("worker count must be at least 1");
  if (a.nnz() == 0) return;
  if (num_parts == 0) num_parts = workers;
  num_parts = std::min(num_parts, a.nnz());
  parts_ = partition(a, num_parts);
  for (std::size_t n = 0; n < a.order(); ++n) {
    auto plan = strategy ? plan_conflicts(a, parts_, n, *strategy)
                         : plan_conflicts(a, parts_, n);
    if (plan.strategy == Strategy::Atomic && plan.flag_bit) {
      flagged_ = apply_boundary_flags(std::move(flagged_), parts_, plan);
    }
    plans_.push_back(std::move(plan));
  }
}

template <typename Index>
FactorMatrix MttkrpEngine<Index>::operator()(std::span<const FactorMatrix> factors,
                                             std::size_t mode) const {
  if (flagged_.nnz() == 0) return mttkrp_seq(flagged_, factors, mode);
  check_factors(flagged_.layout.dims, factors, mode);
  return mttkrp_par(flagged_, parts_, plans_[mode], factors, mode, workers_);
}

template FactorMatrix mttkrp_seq(const AltoTensor<std::uint64_t>&,
                                 std::span<const FactorMatrix>, std::size_t);
template FactorMatrix mttkrp_seq(const AltoTensor<u128>&, std::span<const FactorMatrix>,
                                 std::size_t);
template FactorMatrix mttkrp_par(const AltoTensor<std::uint64_t>&, const PartitionSet&,
                                 const ConflictPlan&, std::span<const FactorMatrix>,
                                 std::size_t, unsigned);
template FactorMatrix mttkrp_par(const AltoTensor<u128>&, const PartitionSet&,
                                 const ConflictPlan&, std::span<const FactorMatrix>,
                                 std::size_t, unsigned);
template class MttkrpEngine<std::uint64_t>;
template class MttkrpEngine<u128>;

}  // namespace alto
