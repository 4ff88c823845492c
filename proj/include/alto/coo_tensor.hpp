#ifndef ALTO_COO_TENSOR_HPP_
#define ALTO_COO_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace alto {

// Coordinate-list sparse tensor. Coordinates are zero-based and stored
// row-major: nonzero e occupies coords[e*order() .. e*order()+order()).
//
// Tensors produced by make_coo/parse_tns/random_tensor are coalesced:
// sorted lexicographically by coordinates with no duplicate rows.
struct CooTensor {
  std::vector<std::uint64_t> dims;
  std::vector<std::uint64_t> coords;
  std::vector<double> values;

  std::size_t order() const { return dims.size(); }
  std::size_t nnz() const { return values.size(); }

  std::uint64_t coord(std::size_t e, std::size_t mode) const {
    return coords[e * order() + mode];
  }
  std::span<const std::uint64_t> row(std::size_t e) const {
    return {coords.data() + e * order(), order()};
  }

  // Throws ShapeError if any invariant other than coalescing is broken.
  void validate() const;

  bool operator==(const CooTensor&) const = default;
};

// Validates, sorts and sums duplicate coordinates.
CooTensor make_coo(std::vector<std::uint64_t> dims,
                   std::vector<std::uint64_t> coords,
                   std::vector<double> values);

// Reads FROSTT-style text: one nonzero per line, one-based indices followed
// by a value. '#' lines and blank lines are skipped. Dims are the per-mode
// maxima unless `dims` is given, in which case every index is checked
// against it.
CooTensor parse_tns(std::istream& in,
                    const std::optional<std::vector<std::uint64_t>>& dims = {});
CooTensor parse_tns(std::string_view text,
                    const std::optional<std::vector<std::uint64_t>>& dims = {});

void write_tns(std::ostream& out, const CooTensor& t);

// Uniform coordinates, uniform [0,1) values, then coalesced, so the result
// may hold fewer than target_nnz nonzeros.
CooTensor random_tensor(std::span<const std::uint64_t> dims,
                        std::uint64_t target_nnz, std::uint64_t seed);

enum class ReuseClass { Limited, Medium, High };

const char* to_string(ReuseClass c);

struct ReuseReport {
  std::vector<double> reuse;  // M / I_n
  std::vector<ReuseClass> classes;
  ReuseClass overall = ReuseClass::High;
};

ReuseClass classify_reuse(double reuse);
ReuseReport fiber_reuse(std::span<const std::uint64_t> dims, std::uint64_t nnz);
ReuseReport fiber_reuse(const CooTensor& t);

}  // namespace alto

#endif  // ALTO_COO_TENSOR_HPP_
