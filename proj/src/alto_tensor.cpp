#include "alto/alto_tensor.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>

namespace alto {

template <typename Index>
AltoTensor<Index> build_alto_as(const CooTensor& t) {
  t.validate();
  AltoTensor<Index> a;
  a.layout = build_masks(t.dims);
  if (a.layout.total_bits > 8 * sizeof(Index)) {
    throw WidthError("index needs " + std::to_string(a.layout.total_bits) +
                     " bits but the word has " + std::to_string(8 * sizeof(Index)));
  }
  a.layout.width = 8 * sizeof(Index);
  a.flags.assign(t.order(), std::nullopt);

  const std::size_t m = t.nnz();
  std::vector<std::pair<Index, std::size_t>> keyed(m);
  for (std::size_t e = 0; e < m; ++e) {
    keyed[e] = {static_cast<Index>(linearize(a.layout, t.row(e))), e};
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  a.indices.resize(m);
  a.values.resize(m);
  for (std::size_t e = 0; e < m; ++e) {
    if (e > 0 && keyed[e].first == keyed[e - 1].first) {
      throw ShapeError("duplicate coordinates; coalesce the tensor first");
    }
    a.indices[e] = keyed[e].first;
    a.values[e] = t.values[keyed[e].second];
  }
  return a;
}

AnyAltoTensor build_alto(const CooTensor& t) {
  t.validate();
  unsigned total = 0;
  for (auto d : t.dims) total += bits_for(d);
  if (total <= 64) return build_alto_as<std::uint64_t>(t);
  return build_alto_as<u128>(t);
}

template <typename Index>
CooTensor to_coo(const AltoTensor<Index>& a) {
  const std::size_t n = a.order();
  std::vector<std::uint64_t> coords(a.nnz() * n);
  for (std::size_t e = 0; e < a.nnz(); ++e) {
    for (std::size_t k = 0; k < n; ++k) coords[e * n + k] = a.coord(e, k);
  }
  return make_coo(a.layout.dims, std::move(coords), a.values);
}

CooTensor to_coo(const AnyAltoTensor& a) {
  return std::visit([](const auto& t) { return to_coo(t); }, a);
}

const AltoLayout& layout_of(const AnyAltoTensor& a) {
  return std::visit([](const auto& t) -> const AltoLayout& { return t.layout; }, a);
}

std::size_t nnz_of(const AnyAltoTensor& a) {
  return std::visit([](const auto& t) { return t.nnz(); }, a);
}

std::optional<Interval> intersect(const Interval& a, const Interval& b) {
  Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
  if (r.lo > r.hi) return std::nullopt;
  return r;
}

template <typename Index>
PartitionSet partition(const AltoTensor<Index>& a, std::size_t num_parts) {
  const std::size_t m = a.nnz();
  if (num_parts < 1 || num_parts > m) {
    throw ShapeError("partition count " + std::to_string(num_parts) +
                     " must lie in [1, " + std::to_string(m) + "]");
  }
  const std::size_t n = a.order();
  const std::size_t base = m / num_parts;
  const std::size_t extra = m % num_parts;

  PartitionSet set;
  set.nnz = m;
  set.parts.resize(num_parts);
  for (std::size_t l = 0; l < num_parts; ++l) {
    Partition& p = set.parts[l];
    p.begin = l * base + std::min(l, extra);
    p.size = base + (l < extra ? 1 : 0);
    p.intervals.assign(n, Interval{~std::uint64_t{0}, 0});
    for (std::size_t e = p.begin; e < p.end(); ++e) {
      for (std::size_t k = 0; k < n; ++k) {
        auto c = a.coord(e, k);
        p.intervals[k].lo = std::min(p.intervals[k].lo, c);
        p.intervals[k].hi = std::max(p.intervals[k].hi, c);
      }
    }
  }
  return set;
}

const char* to_string(Strategy s) {
  return s == Strategy::Buffered ? "Buffered" : "Atomic";
}

Strategy select_strategy(std::uint64_t nnz, std::uint64_t mode_length) {
  double reuse = static_cast<double>(nnz) / static_cast<double>(mode_length);
  return reuse > kBufferedReuseThreshold ? Strategy::Buffered : Strategy::Atomic;
}

namespace {

// Rows covered by at least two of the given intervals, as sorted disjoint
// intervals.
std::vector<Interval> shared_rows(const std::vector<Interval>& spans) {
  // +1 at lo, -1 after hi. Ends sort before starts at the same point so that
  // touching-but-disjoint intervals are not counted twice.
  std::vector<std::pair<std::uint64_t, int>> events;
  events.reserve(2 * spans.size());
  for (const auto& s : spans) {
    events.emplace_back(s.lo, +1);
    events.emplace_back(s.hi + 1, -1);
  }
  std::sort(events.begin(), events.end());

  std::vector<Interval> out;
  int depth = 0;
  std::uint64_t start = 0;
  for (const auto& [at, delta] : events) {
    int before = depth;
    depth += delta;
    if (before < 2 && depth >= 2) {
      start = at;
    } else if (before >= 2 && depth < 2) {
      if (!out.empty() && out.back().hi + 1 == start) {
        out.back().hi = at - 1;
      } else {
        out.push_back({start, at - 1});
      }
    }
  }
  return out;
}

void check_parts(std::size_t nnz, const PartitionSet& parts) {
  if (parts.nnz != nnz || parts.parts.empty() || parts.parts.back().end() != nnz) {
    throw ShapeError("partition set does not match the tensor");
  }
}

}  // namespace

template <typename Index>
ConflictPlan plan_conflicts(const AltoTensor<Index>& a, const PartitionSet& parts,
                            std::size_t mode, Strategy strategy) {
  if (mode >= a.order()) throw ShapeError("mode out of range");
  check_parts(a.nnz(), parts);

  ConflictPlan plan;
  plan.mode = mode;
  plan.strategy = strategy;

  std::vector<Interval> spans;
  spans.reserve(parts.count());
  for (const auto& p : parts.parts) spans.push_back(p.intervals[mode]);
  const auto shared = shared_rows(spans);

  plan.overlaps.resize(parts.count());
  for (std::size_t l = 0; l < parts.count(); ++l) {
    const Interval& own = spans[l];
    auto it = std::lower_bound(shared.begin(), shared.end(), own.lo,
                               [](const Interval& s, std::uint64_t v) { return s.hi < v; });
    for (; it != shared.end() && it->lo <= own.hi; ++it) {
      if (auto x = intersect(own, *it)) plan.overlaps[l].push_back(*x);
    }
  }

  // One flag bit per mode, taken from the top of the word downwards.
  if (strategy == Strategy::Atomic) {
    const unsigned width = a.layout.width;
    if (mode < width && width - 1 - mode >= a.layout.total_bits) {
      plan.flag_bit = static_cast<unsigned>(width - 1 - mode);
    }
  }
  return plan;
}

template <typename Index>
ConflictPlan plan_conflicts(const AltoTensor<Index>& a, const PartitionSet& parts,
                            std::size_t mode) {
  if (mode >= a.order()) throw ShapeError("mode out of range");
  return plan_conflicts(a, parts, mode, select_strategy(a.nnz(), a.layout.dims[mode]));
}

template <typename Index>
AltoTensor<Index> apply_boundary_flags(AltoTensor<Index> a, const PartitionSet& parts,
                                       const ConflictPlan& plan) {
  if (plan.strategy != Strategy::Atomic || !plan.flag_bit) {
    throw ShapeError("no flag bit available; run without flags");
  }
  check_parts(a.nnz(), parts);
  if (plan.overlaps.size() != parts.count() || plan.mode >= a.order()) {
    throw ShapeError("conflict plan does not match the partition set");
  }

  const Index bit = Index{1} << *plan.flag_bit;
  const auto& mask = a.layout.split[plan.mode];
  for (std::size_t l = 0; l < parts.count(); ++l) {
    const auto& shared = plan.overlaps[l];
    const auto& p = parts.parts[l];
    for (std::size_t e = p.begin; e < p.end(); ++e) {
      const auto c = extract(a.indices[e], mask);
      bool boundary = std::any_of(shared.begin(), shared.end(),
                                  [c](const Interval& s) { return s.contains(c); });
      if (boundary) {
        a.indices[e] |= bit;
      } else {
        a.indices[e] &= ~bit;
      }
    }
  }
  a.flags[plan.mode] = ModeFlags{*plan.flag_bit, parts.count()};
  return a;
}

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void word(u128 v, unsigned width) {
    u64(static_cast<std::uint64_t>(v));
    if (width == 128) u64(static_cast<std::uint64_t>(v >> 64));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  u128 word(unsigned width) {
    u128 v = u64();
    if (width == 128) v |= u128{u64()} << 64;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  // Fails early on absurd counts instead of allocating for them.
  void need(std::size_t bytes) const {
    if (in_.size() - pos_ < bytes) throw FormatError("truncated .alto container");
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'A', 'L', 'T', 'O'};

template <typename Index>
AltoTensor<Index> read_body(ByteReader& r, const AltoLayout& layout, std::size_t nnz) {
  AltoTensor<Index> a;
  a.layout = layout;
  a.flags.assign(layout.order(), std::nullopt);
  const unsigned width = layout.width;
  r.need(nnz * (width / 8 + 8));
  a.indices.resize(nnz);
  a.values.resize(nnz);
  const u128 valid = layout.total_bits == 128 ? ~u128{0}
                                              : (u128{1} << layout.total_bits) - 1;
  for (std::size_t e = 0; e < nnz; ++e) {
    u128 idx = r.word(width);
    if ((idx & ~valid) != 0) throw FormatError("index has bits outside the layout");
    a.indices[e] = static_cast<Index>(idx);
    if (e > 0 && a.indices[e] <= a.indices[e - 1]) {
      throw FormatError("indices are not strictly ascending");
    }
    for (std::size_t n = 0; n < layout.order(); ++n) {
      if (extract(a.indices[e], layout.split[n]) >= layout.dims[n]) {
        throw FormatError("index decodes outside the tensor dimensions");
      }
    }
  }
  for (std::size_t e = 0; e < nnz; ++e) a.values[e] = r.f64();
  return a;
}

}  // namespace

std::vector<std::uint8_t> serialize(const AnyAltoTensor& any) {
  return std::visit(
      [](const auto& a) {
        const auto& layout = a.layout;
        const u128 valid = layout.total_bits == 128 ? ~u128{0}
                                                    : (u128{1} << layout.total_bits) - 1;
        ByteWriter w;
        for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
        w.u8(kContainerVersion);
        w.u8(static_cast<std::uint8_t>(layout.order()));
        w.u8(static_cast<std::uint8_t>(layout.width));
        w.u8(0);
        for (auto d : layout.dims) w.u64(d);
        w.u64(a.nnz());
        for (auto m : layout.masks) w.word(m, layout.width);
        for (auto idx : a.indices) w.word(u128{idx} & valid, layout.width);
        for (auto v : a.values) w.f64(v);
        return w.take();
      },
      any);
}

AnyAltoTensor deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw FormatError("bad magic; not an .alto file");
  }
  if (auto v = r.u8(); v != kContainerVersion) {
    throw FormatError("unsupported container version " + std::to_string(v));
  }
  const std::size_t order = r.u8();
  const unsigned width = r.u8();
  r.u8();  // reserved
  if (order == 0) throw FormatError("tensor order must be at least 1");
  if (width != 64 && width != 128) {
    throw FormatError("unsupported index width " + std::to_string(width));
  }

  std::vector<std::uint64_t> dims(order);
  for (auto& d : dims) d = r.u64();
  const std::uint64_t nnz = r.u64();

  AltoLayout layout;
  try {
    layout = build_masks(dims);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid dimensions: ") + e.what());
  }
  if (layout.total_bits > width) throw FormatError("layout does not fit the index width");
  layout.width = width;
  for (std::size_t n = 0; n < order; ++n) {
    if (r.word(width) != layout.masks[n]) {
      throw FormatError("stored mask for mode " + std::to_string(n + 1) +
                        " does not match the dimensions");
    }
  }
  if (nnz > bytes.size()) throw FormatError("truncated .alto container");

  AnyAltoTensor out;
  if (width == 64) {
    out = read_body<std::uint64_t>(r, layout, nnz);
  } else {
    out = read_body<u128>(r, layout, nnz);
  }
  if (!r.done()) throw FormatError("trailing bytes after .alto payload");
  return out;
}

void write_alto(std::ostream& out, const AnyAltoTensor& a) {
  auto bytes = serialize(a);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failure");
}

AnyAltoTensor read_alto(std::istream& in) {
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  if (in.bad()) throw FormatError("read failure");
  return deserialize(bytes);
}

template AltoTensor<std::uint64_t> build_alto_as(const CooTensor&);
template AltoTensor<u128> build_alto_as(const CooTensor&);
template CooTensor to_coo(const AltoTensor<std::uint64_t>&);
template CooTensor to_coo(const AltoTensor<u128>&);
template PartitionSet partition(const AltoTensor<std::uint64_t>&, std::size_t);
template PartitionSet partition(const AltoTensor<u128>&, std::size_t);
template ConflictPlan plan_conflicts(const AltoTensor<std::uint64_t>&,
                                     const PartitionSet&, std::size_t);
template ConflictPlan plan_conflicts(const AltoTensor<u128>&, const PartitionSet&,
                                     std::size_t);
template ConflictPlan plan_conflicts(const AltoTensor<std::uint64_t>&,
                                     const PartitionSet&, std::size_t, Strategy);
template ConflictPlan plan_conflicts(const AltoTensor<u128>&, const PartitionSet&,
                                     std::size_t, Strategy);
template AltoTensor<std::uint64_t> apply_boundary_flags(AltoTensor<std::uint64_t>,
                                                        const PartitionSet&,
                                                        const ConflictPlan&);
template AltoTensor<u128> apply_boundary_flags(AltoTensor<u128>, const PartitionSet&,
                                               const ConflictPlan&);

}  // namespace alto
