#include "alto/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace alto {

unsigned bits_for(std::uint64_t dim) {
  if (dim <= 1) return 0;
  return static_cast<unsigned>(std::bit_width(dim - 1));
}

u128 AltoLayout::unused_mask() const {
  u128 all = width == 128 ? ~u128{0} : u128{~std::uint64_t{0}};
  u128 used = total_bits == 128 ? ~u128{0} : ((u128{1} << total_bits) - 1);
  return all & ~used;
}

AltoLayout build_masks(std::span<const std::uint64_t> dims) {
  if (dims.empty()) throw ShapeError("tensor order must be at least 1");
  AltoLayout layout;
  layout.dims.assign(dims.begin(), dims.end());
  unsigned max_bits = 0;
  for (auto d : dims) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
    unsigned b = bits_for(d);
    layout.bits.push_back(b);
    layout.total_bits += b;
    max_bits = std::max(max_bits, b);
  }
  if (layout.total_bits > 128) {
    throw WidthError("linearized index needs " + std::to_string(layout.total_bits) +
                     " bits; at most 128 are supported");
  }
  layout.width = layout.total_bits <= 64 ? 64 : 128;

  const std::size_t n = dims.size();
  std::vector<std::size_t> by_length(n);
  std::iota(by_length.begin(), by_length.end(), std::size_t{0});
  std::stable_sort(by_length.begin(), by_length.end(),
                   [&](std::size_t a, std::size_t b) { return dims[a] < dims[b]; });

  layout.masks.assign(n, 0);
  unsigned pos = 0;
  for (unsigned level = 0; level < max_bits; ++level) {
    for (auto mode : by_length) {
      if (layout.bits[mode] > level) layout.masks[mode] |= u128{1} << pos++;
    }
  }

  for (auto m : layout.masks) {
    ModeMask s;
    s.lo = static_cast<std::uint64_t>(m);
    s.hi = static_cast<std::uint64_t>(m >> 64);
    s.lo_bits = static_cast<unsigned>(std::popcount(s.lo));
    layout.split.push_back(s);
  }
  return layout;
}

u128 linearize(const AltoLayout& layout, std::span<const std::uint64_t> coords) {
  if (coords.size() != layout.order()) {
    throw ShapeError("coordinate tuple has wrong order");
  }
  u128 index = 0;
  for (std::size_t n = 0; n < coords.size(); ++n) {
    if (coords[n] >= layout.dims[n]) {
      throw ShapeError("coordinate " + std::to_string(coords[n]) +
                       " out of range for mode " + std::to_string(n + 1));
    }
    const auto& m = layout.split[n];
    index |= pdep64(coords[n], m.lo);
    if (m.hi != 0) {
      index |= u128{pdep64(coords[n] >> m.lo_bits, m.hi)} << 64;
    }
  }
  return index;
}

void delinearize(const AltoLayout& layout, u128 index,
                 std::span<std::uint64_t> coords) {
  for (std::size_t n = 0; n < layout.order(); ++n) {
    coords[n] = extract(index, layout.split[n]);
  }
}

std::vector<std::uint64_t> delinearize(const AltoLayout& layout, u128 index) {
  std::vector<std::uint64_t> coords(layout.order());
  delinearize(layout, index, coords);
  return coords;
}

StorageStats storage_stats(std::span<const std::uint64_t> dims, std::uint64_t nnz,
                           unsigned word_bits) {
  if (word_bits != 8 && word_bits != 16 && word_bits != 32 && word_bits != 64) {
    throw ShapeError("word size must be 8, 16, 32 or 64 bits");
  }
  auto words = [word_bits](unsigned bits) { return (bits + word_bits - 1) / word_bits; };

  const double m = static_cast<double>(nnz);
  unsigned total = 0;
  unsigned max_bits = 0;
  unsigned coo_words = 0;
  double info_bits = 0.0;
  for (auto d : dims) {
    unsigned b = bits_for(d);
    total += b;
    max_bits = std::max(max_bits, b);
    coo_words += words(b);
    info_bits += std::log2(static_cast<double>(d));
  }
  const unsigned width = total <= 64 ? 64 : 128;

  StorageStats s;
  s.word_bits = word_bits;
  s.coo_bits = m * coo_words * word_bits;
  s.alto_bits = m * info_bits;
  s.alto_packed_bits = m * words(total) * word_bits;
  s.alto_stored_bits = m * width;
  s.sfc_bits = m * static_cast<double>(dims.size()) * max_bits;
  // A tensor of all unit modes carries no index information at all.
  s.coo_over_alto = total == 0 ? 1.0
                               : static_cast<double>(coo_words) / words(total);
  return s;
}

}  // namespace alto
