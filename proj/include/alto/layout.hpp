#ifndef ALTO_LAYOUT_HPP_
#define ALTO_LAYOUT_HPP_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "alto/common.hpp"

#if defined(__BMI2__)
#include <immintrin.h>
#endif

namespace alto {

// Bit-level gather/scatter on one 64-bit word. Use PEXT/PDEP when the
// target has BMI2, a set-bit walk otherwise.
inline std::uint64_t pext64(std::uint64_t x, std::uint64_t mask) {
#if defined(__BMI2__)
  return _pext_u64(x, mask);
#else
  std::uint64_t out = 0;
  for (std::uint64_t bb = 1; mask != 0; bb <<= 1, mask &= mask - 1) {
    if (x & mask & (~mask + 1)) out |= bb;
  }
  return out;
#endif
}

inline std::uint64_t pdep64(std::uint64_t x, std::uint64_t mask) {
#if defined(__BMI2__)
  return _pdep_u64(x, mask);
#else
  std::uint64_t out = 0;
  for (std::uint64_t bb = 1; mask != 0; bb <<= 1, mask &= mask - 1) {
    if (x & bb) out |= mask & (~mask + 1);
  }
  return out;
#endif
}

// Per-mode mask split into 64-bit halves for the extraction hot path.
struct ModeMask {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  unsigned lo_bits = 0;  // popcount(lo)
};

inline std::uint64_t extract(std::uint64_t index, const ModeMask& m) {
  return pext64(index, m.lo);
}

inline std::uint64_t extract(u128 index, const ModeMask& m) {
  std::uint64_t v = pext64(static_cast<std::uint64_t>(index), m.lo);
  if (m.hi != 0) {
    v |= pext64(static_cast<std::uint64_t>(index >> 64), m.hi) << m.lo_bits;
  }
  return v;
}

// Adaptive bit layout of the linearized index.
//
// Bits are handed out in groups from the least significant end. Group g
// holds bit g of every mode that still has more than g bits; inside a group
// the modes are ordered by ascending length (ties: ascending mode number),
// shortest first. The longest modes therefore own the top of the index,
// which splits space along the longest mode first.
struct AltoLayout {
  std::vector<std::uint64_t> dims;
  std::vector<unsigned> bits;  // ceil(log2 I_n), 0 for I_n == 1
  std::vector<u128> masks;
  std::vector<ModeMask> split;
  unsigned total_bits = 0;
  unsigned width = 64;  // 64 or 128

  std::size_t order() const { return dims.size(); }

  // Bits above total_bits, available for flags.
  u128 unused_mask() const;

  bool operator==(const AltoLayout& o) const {
    return dims == o.dims && masks == o.masks && width == o.width;
  }
};

unsigned bits_for(std::uint64_t dim);

AltoLayout build_masks(std::span<const std::uint64_t> dims);

// Deposits each coordinate into its mode's mask positions. Throws
// ShapeError on out-of-range coordinates.
u128 linearize(const AltoLayout& layout, std::span<const std::uint64_t> coords);

// Gathers each mode's bits back out. Bits outside every mask are ignored.
std::vector<std::uint64_t> delinearize(const AltoLayout& layout, u128 index);
void delinearize(const AltoLayout& layout, u128 index,
                 std::span<std::uint64_t> coords);

// Index metadata sizes, in bits, for M nonzeros.
struct StorageStats {
  unsigned word_bits = 8;
  double coo_bits = 0;           // M * sum ceil(b_n / W_b) * W_b
  double alto_bits = 0;          // M * sum log2 I_n (information content)
  double alto_packed_bits = 0;   // M * ceil(total_bits / W_b) * W_b
  double alto_stored_bits = 0;   // M * width, what the container holds
  double sfc_bits = 0;           // M * N * max_n ceil(log2 I_n)
  double coo_over_alto = 1.0;    // sum ceil(b_n / W_b) / ceil(total_bits / W_b)
};

StorageStats storage_stats(std::span<const std::uint64_t> dims, std::uint64_t nnz,
                           unsigned word_bits);

}  // namespace alto

#endif  // ALTO_LAYOUT_HPP_
