#ifndef ALTO_ALTO_TENSOR_HPP_
#define ALTO_ALTO_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "alto/common.hpp"
#include "alto/coo_tensor.hpp"
#include "alto/layout.hpp"

namespace alto {

// Flag bits applied to a tensor for one mode. The flags are only meaningful
// for the partition count they were computed against.
struct ModeFlags {
  unsigned bit = 0;
  std::size_t partitions = 0;

  bool operator==(const ModeFlags&) const = default;
};

// Linearized tensor: nonzeros sorted by their ALTO index. `Index` is the
// storage word, std::uint64_t or u128.
template <typename Index>
struct AltoTensor {
  AltoLayout layout;
  std::vector<Index> indices;
  std::vector<double> values;
  // Indexed by mode; empty entries mean no flags for that mode.
  std::vector<std::optional<ModeFlags>> flags;

  std::size_t nnz() const { return values.size(); }
  std::size_t order() const { return layout.order(); }

  std::uint64_t coord(std::size_t e, std::size_t mode) const {
    return extract(indices[e], layout.split[mode]);
  }

  bool operator==(const AltoTensor&) const = default;
};

using AnyAltoTensor = std::variant<AltoTensor<std::uint64_t>, AltoTensor<u128>>;

// Linearizes and sorts a coalesced COO tensor. The word type follows the
// layout's width.
AnyAltoTensor build_alto(const CooTensor& t);

// Builds with an explicit word type. Throws WidthError if the layout does
// not fit `Index`.
template <typename Index>
AltoTensor<Index> build_alto_as(const CooTensor& t);

template <typename Index>
CooTensor to_coo(const AltoTensor<Index>& a);
CooTensor to_coo(const AnyAltoTensor& a);

const AltoLayout& layout_of(const AnyAltoTensor& a);
std::size_t nnz_of(const AnyAltoTensor& a);

// Closed coordinate range [lo, hi].
struct Interval {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  bool contains(std::uint64_t c) const { return lo <= c && c <= hi; }
  std::uint64_t length() const { return hi - lo + 1; }
  bool operator==(const Interval&) const = default;
};

std::optional<Interval> intersect(const Interval& a, const Interval& b);

// One line segment: a contiguous run of sorted nonzeros and the tight
// per-mode bounds of the nonzeros it holds.
struct Partition {
  std::size_t begin = 0;
  std::size_t size = 0;
  std::vector<Interval> intervals;

  std::size_t end() const { return begin + size; }
};

struct PartitionSet {
  std::vector<Partition> parts;
  std::size_t nnz = 0;

  std::size_t count() const { return parts.size(); }
};

// Splits the sorted nonzeros into L runs whose sizes differ by at most one.
// Requires 1 <= L <= nnz.
template <typename Index>
PartitionSet partition(const AltoTensor<Index>& a, std::size_t num_parts);

enum class Strategy { Buffered, Atomic };

const char* to_string(Strategy s);

// Buffered (privatized rows, pull merge) pays off once a row is hit by more
// nonzeros than its staging costs: two reads and two writes.
inline constexpr double kBufferedReuseThreshold = 4.0;

Strategy select_strategy(std::uint64_t nnz, std::uint64_t mode_length);

struct ConflictPlan {
  std::size_t mode = 0;
  Strategy strategy = Strategy::Atomic;
  // Per partition: the target-mode rows it shares with any other partition,
  // as sorted, disjoint intervals.
  std::vector<std::vector<Interval>> overlaps;
  std::optional<unsigned> flag_bit;
};

template <typename Index>
ConflictPlan plan_conflicts(const AltoTensor<Index>& a, const PartitionSet& parts,
                            std::size_t mode);

// Same as above with the strategy chosen by the caller instead of by reuse.
template <typename Index>
ConflictPlan plan_conflicts(const AltoTensor<Index>& a, const PartitionSet& parts,
                            std::size_t mode, Strategy strategy);

// Sets plan.flag_bit on every nonzero whose target-mode coordinate lies in
// its partition's overlap set. The sort order is not revisited.
template <typename Index>
AltoTensor<Index> apply_boundary_flags(AltoTensor<Index> a, const PartitionSet& parts,
                                       const ConflictPlan& plan);

// Binary container, little-endian:
//   "ALTO" | version u8 = 1 | order u8 | width u8 (64|128) | reserved u8
//   dims u64[N] | nnz u64 | masks [N] | indices [M] | values f64[M]
// Masks and indices are width/8 bytes each. Flag bits are not stored.
inline constexpr std::uint8_t kContainerVersion = 1;

std::vector<std::uint8_t> serialize(const AnyAltoTensor& a);
AnyAltoTensor deserialize(std::span<const std::uint8_t> bytes);

void write_alto(std::ostream& out, const AnyAltoTensor& a);
AnyAltoTensor read_alto(std::istream& in);

extern template AltoTensor<std::uint64_t> build_alto_as(const CooTensor&);
extern template AltoTensor<u128> build_alto_as(const CooTensor&);
extern template CooTensor to_coo(const AltoTensor<std::uint64_t>&);
extern template CooTensor to_coo(const AltoTensor<u128>&);
extern template PartitionSet partition(const AltoTensor<std::uint64_t>&, std::size_t);
extern template PartitionSet partition(const AltoTensor<u128>&, std::size_t);
extern template ConflictPlan plan_conflicts(const AltoTensor<std::uint64_t>&,
                                            const PartitionSet&, std::size_t);
extern template ConflictPlan plan_conflicts(const AltoTensor<u128>&,
                                            const PartitionSet&, std::size_t);
extern template ConflictPlan plan_conflicts(const AltoTensor<std::uint64_t>&,
                                            const PartitionSet&, std::size_t, Strategy);
extern template ConflictPlan plan_conflicts(const AltoTensor<u128>&,
                                            const PartitionSet&, std::size_t, Strategy);
extern template AltoTensor<std::uint64_t> apply_boundary_flags(
    AltoTensor<std::uint64_t>, const PartitionSet&, const ConflictPlan&);
extern template AltoTensor<u128> apply_boundary_flags(AltoTensor<u128>,
                                                      const PartitionSet&,
                                                      const ConflictPlan&);

}  // namespace alto

#endif  // ALTO_ALTO_TENSOR_HPP_
