#include "alto/coo_tensor.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "alto/common.hpp"

namespace alto {

std::string to_hex(u128 value) {
  static constexpr char digits[] = "0123456789abcdef";
  if (value == 0) return "0x0";
  std::string out;
  while (value != 0) {
    out.push_back(digits[static_cast<unsigned>(value & 0xF)]);
    value >>= 4;
  }
  out += "x0";
  std::reverse(out.begin(), out.end());
  return out;
}

void CooTensor::validate() const {
  if (dims.empty()) throw ShapeError("tensor order must be at least 1");
  for (auto d : dims) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
  }
  if (coords.size() != values.size() * dims.size()) {
    throw ShapeError("coordinate count does not match nnz * order");
  }
  const std::size_t n = order();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] >= dims[i % n]) {
      throw ShapeError("coordinate " + std::to_string(coords[i]) +
                       " out of range for mode " + std::to_string(i % n + 1));
    }
  }
}

CooTensor make_coo(std::vector<std::uint64_t> dims,
                   std::vector<std::uint64_t> coords,
                   std::vector<double> values) {
  CooTensor in{std::move(dims), std::move(coords), std::move(values)};
  in.validate();

  const std::size_t n = in.order();
  std::vector<std::size_t> perm(in.nnz());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(
        in.coords.begin() + a * n, in.coords.begin() + (a + 1) * n,
        in.coords.begin() + b * n, in.coords.begin() + (b + 1) * n);
  });

  CooTensor out;
  out.dims = in.dims;
  out.coords.reserve(in.coords.size());
  out.values.reserve(in.values.size());
  for (std::size_t p : perm) {
    auto row = in.row(p);
    if (!out.values.empty() &&
        std::equal(row.begin(), row.end(), out.coords.end() - n)) {
      out.values.back() += in.values[p];
      continue;
    }
    out.coords.insert(out.coords.end(), row.begin(), row.end());
    out.values.push_back(in.values[p]);
  }
  return out;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

ParseError parse_error(std::size_t lineno, const std::string& what) {
  return ParseError("line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

CooTensor parse_tns(std::istream& in,
                    const std::optional<std::vector<std::uint64_t>>& dims) {
  std::vector<std::uint64_t> coords;
  std::vector<double> values;
  std::size_t order = 0;
  std::string line;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (order == 0) {
      if (tokens.size() < 2) {
        throw parse_error(lineno, "expected at least one index and a value");
      }
      order = tokens.size() - 1;
      if (dims && dims->size() != order) {
        throw parse_error(lineno, "order " + std::to_string(order) +
                                      " does not match the given dims");
      }
    } else if (tokens.size() != order + 1) {
      throw parse_error(lineno, "expected " + std::to_string(order + 1) +
                                    " tokens, found " +
                                    std::to_string(tokens.size()));
    }
    for (std::size_t n = 0; n < order; ++n) {
      auto tok = tokens[n];
      std::uint64_t idx = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw parse_error(lineno, "bad index '" + std::string(tok) + "'");
      }
      if (idx < 1) throw parse_error(lineno, "indices are one-based");
      coords.push_back(idx - 1);
    }
    auto tok = tokens[order];
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw parse_error(lineno, "bad value '" + std::string(tok) + "'");
    }
    values.push_back(v);
  }
  if (in.bad()) throw ParseError("read failure");
  if (values.empty()) throw ParseError("no nonzeros in input");

  std::vector<std::uint64_t> shape;
  if (dims) {
    shape = *dims;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (coords[i] >= shape[i % order]) {
        throw ParseError("index " + std::to_string(coords[i] + 1) +
                         " exceeds dimension of mode " +
                         std::to_string(i % order + 1));
      }
    }
  } else {
    shape.assign(order, 0);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      shape[i % order] = std::max(shape[i % order], coords[i] + 1);
    }
  }
  return make_coo(std::move(shape), std::move(coords), std::move(values));
}

CooTensor parse_tns(std::string_view text,
                    const std::optional<std::vector<std::uint64_t>>& dims) {
  std::istringstream in{std::string(text)};
  return parse_tns(in, dims);
}

void write_tns(std::ostream& out, const CooTensor& t) {
  char buf[64];
  for (std::size_t e = 0; e < t.nnz(); ++e) {
    for (auto c : t.row(e)) out << (c + 1) << ' ';
    // Shortest round-trippable representation.
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), t.values[e]);
    out.write(buf, end - buf);
    out << '\n';
  }
}

CooTensor random_tensor(std::span<const std::uint64_t> dims,
                        std::uint64_t target_nnz, std::uint64_t seed) {
  if (dims.empty()) throw ShapeError("tensor order must be at least 1");
  long double volume = 1.0L;
  for (auto d : dims) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
    volume *= static_cast<long double>(d);
  }
  if (static_cast<long double>(target_nnz) > volume) {
    throw ShapeError("target nnz exceeds the number of cells");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> coords(target_nnz * dims.size());
  std::vector<double> values(target_nnz);
  std::uniform_real_distribution<double> value_dist(0.0, 1.0);
  for (std::uint64_t e = 0; e < target_nnz; ++e) {
    for (std::size_t n = 0; n < dims.size(); ++n) {
      std::uniform_int_distribution<std::uint64_t> idx(0, dims[n] - 1);
      coords[e * dims.size() + n] = idx(rng);
    }
    values[e] = value_dist(rng);
  }
  return make_coo({dims.begin(), dims.end()}, std::move(coords), std::move(values));
}

const char* to_string(ReuseClass c) {
  switch (c) {
    case ReuseClass::High: return "High";
    case ReuseClass::Medium: return "Medium";
    case ReuseClass::Limited: return "Limited";
  }
  return "?";
}

ReuseClass classify_reuse(double reuse) {
  if (reuse > 8.0) return ReuseClass::High;
  if (reuse >= 5.0) return ReuseClass::Medium;
  return ReuseClass::Limited;
}

ReuseReport fiber_reuse(std::span<const std::uint64_t> dims, std::uint64_t nnz) {
  ReuseReport report;
  for (auto d : dims) {
    double r = static_cast<double>(nnz) / static_cast<double>(d);
    auto c = classify_reuse(r);
    report.reuse.push_back(r);
    report.classes.push_back(c);
    // Enum order is Limited < Medium < High, so the worst class is the min.
    report.overall = std::min(report.overall, c);
  }
  return report;
}

ReuseReport fiber_reuse(const CooTensor& t) { return fiber_reuse(t.dims, t.nnz()); }

}  // namespace alto
