#ifndef ALTO_MTTKRP_HPP_
#define ALTO_MTTKRP_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "alto/alto_tensor.hpp"
#include "alto/coo_tensor.hpp"
#include "alto/matrix.hpp"

namespace alto {

// out(i, r) = sum over nonzeros x with coordinate i along `mode` of
//   val(x) * prod_{n != mode} factors[n](x_n, r)
//
// Every kernel below computes this quantity. `factors` holds one matrix per
// mode; the target mode's entry only contributes its shape.

// Reference over the coordinate list, accumulating in input order.
FactorMatrix mttkrp_oracle(const CooTensor& t, std::span<const FactorMatrix> factors,
                           std::size_t mode);

// Single-threaded walk of the linearized nonzeros.
template <typename Index>
FactorMatrix mttkrp_seq(const AltoTensor<Index>& a, std::span<const FactorMatrix> factors,
                        std::size_t mode);

// Partition-parallel kernel. Buffered stages each partition's rows in a
// private buffer sized by its mode interval, then every output row pulls
// from the partitions whose interval covers it (ascending partition order,
// so results are reproducible). Atomic adds straight into the output;
// nonzeros carrying the mode's boundary flag use atomic adds, the rest plain
// stores. Without flags on the tensor every add is atomic.
template <typename Index>
FactorMatrix mttkrp_par(const AltoTensor<Index>& a, const PartitionSet& parts,
                        const ConflictPlan& plan, std::span<const FactorMatrix> factors,
                        std::size_t mode, unsigned workers);

// Partitions, plans and flags for every mode of one tensor, prepared once
// and reused across MTTKRP calls.
template <typename Index>
class MttkrpEngine {
 public:
  // `num_parts` of 0 means one partition per worker. A fixed `strategy`
  // overrides the reuse rule on every mode.
  MttkrpEngine(const AltoTensor<Index>& a, unsigned workers, std::size_t num_parts = 0,
               std::optional<Strategy> strategy = std::nullopt);

  FactorMatrix operator()(std::span<const FactorMatrix> factors, std::size_t mode) const;

  const ConflictPlan& plan(std::size_t mode) const { return plans_[mode]; }
  const PartitionSet& partitions() const { return parts_; }
  const AltoTensor<Index>& tensor() const { return flagged_; }
  unsigned workers() const { return workers_; }

 private:
  AltoTensor<Index> flagged_;
  PartitionSet parts_;
  std::vector<ConflictPlan> plans_;
  unsigned workers_;
};

// Throws ShapeError unless there is one factor per mode with matching rows
// and a shared column count.
void check_factors(std::span<const std::uint64_t> dims,
                   std::span<const FactorMatrix> factors, std::size_t mode);

extern template FactorMatrix mttkrp_seq(const AltoTensor<std::uint64_t>&,
                                        std::span<const FactorMatrix>, std::size_t);
extern template FactorMatrix mttkrp_seq(const AltoTensor<u128>&,
                                        std::span<const FactorMatrix>, std::size_t);
extern template FactorMatrix mttkrp_par(const AltoTensor<std::uint64_t>&,
                                        const PartitionSet&, const ConflictPlan&,
                                        std::span<const FactorMatrix>, std::size_t,
                                        unsigned);
extern template FactorMatrix mttkrp_par(const AltoTensor<u128>&, const PartitionSet&,
                                        const ConflictPlan&, std::span<const FactorMatrix>,
                                        std::size_t, unsigned);
extern template class MttkrpEngine<std::uint64_t>;
extern template class MttkrpEngine<u128>;

}  // namespace alto

#endif  // ALTO_MTTKRP_HPP_
