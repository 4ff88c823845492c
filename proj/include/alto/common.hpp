#ifndef ALTO_COMMON_HPP_
#define ALTO_COMMON_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace alto {

using u128 = unsigned __int128;

// Error hierarchy. The CLI maps each kind onto its own exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed .tns text.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated .alto container, or I/O failure.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Arguments that do not fit together: factor shapes, modes, partition counts.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// The linearized index would need more than 128 bits.
class WidthError : public Error {
 public:
  using Error::Error;
};

// Numerical failure (singular normal equations).
class SolveError : public Error {
 public:
  using Error::Error;
};

std::string to_hex(u128 value);

}  // namespace alto

#endif  // ALTO_COMMON_HPP_
