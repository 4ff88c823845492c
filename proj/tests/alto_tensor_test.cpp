#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"

#include "alto/alto_tensor.hpp"

using namespace alto;

namespace {

AltoTensor<std::uint64_t> fig5_alto() {
  return build_alto_as<std::uint64_t>(testing::fig5_tensor());
}

template <typename Index>
void check_partition_properties(const AltoTensor<Index>& a, const PartitionSet& set) {
  REQUIRE(set.count() >= 1);
  std::size_t next = 0;
  std::size_t smallest = a.nnz();
  std::size_t largest = 0;
  for (const auto& p : set.parts) {
    CHECK(p.begin == next);
    REQUIRE(p.size > 0);
    next = p.end();
    smallest = std::min(smallest, p.size);
    largest = std::max(largest, p.size);
  }
  CHECK(next == a.nnz());
  CHECK(largest - smallest <= 1);

  for (std::size_t l = 0; l + 1 < set.count(); ++l) {
    CHECK(a.indices[set.parts[l].end() - 1] < a.indices[set.parts[l + 1].begin]);
  }

  for (const auto& p : set.parts) {
    for (std::size_t n = 0; n < a.order(); ++n) {
      bool lo_hit = false;
      bool hi_hit = false;
      for (std::size_t e = p.begin; e < p.end(); ++e) {
        auto c = a.coord(e, n);
        CHECK(p.intervals[n].contains(c));
        lo_hit |= c == p.intervals[n].lo;
        hi_hit |= c == p.intervals[n].hi;
      }
      CHECK(lo_hit);
      CHECK(hi_hit);
    }
  }
}

}  // namespace

TEST_CASE("build_alto sorts the example by linear position") {
  auto a = fig5_alto();
  CHECK(a.indices == std::vector<std::uint64_t>{2, 11, 20, 25, 42, 51});
  CHECK(a.values == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(to_coo(a) == testing::fig5_tensor());

  auto any = build_alto(testing::fig5_tensor());
  CHECK(std::holds_alternative<AltoTensor<std::uint64_t>>(any));
}

TEST_CASE("build_alto single nonzero at the origin") {
  auto a = build_alto_as<std::uint64_t>(make_coo({3, 3, 3}, {0, 0, 0}, {7.0}));
  CHECK(a.indices == std::vector<std::uint64_t>{0});
}

TEST_CASE("build_alto round trips a random tensor through the COO form") {
  auto t = random_tensor(std::vector<std::uint64_t>{100, 80, 60}, 10000, 21);
  auto a = build_alto_as<std::uint64_t>(t);
  CHECK(std::is_sorted(a.indices.begin(), a.indices.end()));
  CHECK(std::adjacent_find(a.indices.begin(), a.indices.end()) == a.indices.end());
  CHECK(to_coo(a) == t);

  auto wide = build_alto_as<u128>(t);
  CHECK(wide.layout.width == 128);
  CHECK(to_coo(wide) == t);
}

TEST_CASE("build_alto width selection") {
  std::vector<std::uint64_t> dims{1u << 30, 1u << 30, 1u << 30};  // 90 bits
  auto t = make_coo(dims, {5, 6, 7, (1u << 30) - 1, 0, 3}, {1.0, 2.0});
  auto any = build_alto(t);
  REQUIRE(std::holds_alternative<AltoTensor<u128>>(any));
  CHECK(to_coo(any) == t);
  CHECK_THROWS_AS(build_alto_as<std::uint64_t>(t), WidthError);

  std::vector<std::uint64_t> huge(5, std::uint64_t{1} << 26);
  CHECK_THROWS_AS(build_alto(make_coo(huge, {}, {})), WidthError);
}

TEST_CASE("partition of the example into two segments") {
  auto a = fig5_alto();
  auto set = partition(a, 2);
  REQUIRE(set.count() == 2);
  CHECK(a.indices[set.parts[0].begin] == 2);
  CHECK(a.indices[set.parts[0].end() - 1] == 20);
  CHECK(a.indices[set.parts[1].begin] == 25);
  CHECK(a.indices[set.parts[1].end() - 1] == 51);
  CHECK(set.parts[0].intervals == std::vector<Interval>{{0, 3}, {0, 3}, {0, 1}});
  CHECK(set.parts[1].intervals == std::vector<Interval>{{1, 3}, {2, 6}, {0, 1}});
  check_partition_properties(a, set);
}

TEST_CASE("partition extremes") {
  auto a = fig5_alto();
  auto one = partition(a, 1);
  CHECK(one.parts[0].intervals == std::vector<Interval>{{0, 3}, {0, 6}, {0, 1}});

  auto each = partition(a, a.nnz());
  for (std::size_t l = 0; l < each.count(); ++l) {
    CHECK(each.parts[l].size == 1);
    for (std::size_t n = 0; n < a.order(); ++n) {
      CHECK(each.parts[l].intervals[n].lo == each.parts[l].intervals[n].hi);
    }
  }

  CHECK_THROWS_AS(partition(a, 0), ShapeError);
  CHECK_THROWS_AS(partition(a, 7), ShapeError);
}

TEST_CASE("partition properties on random tensors") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<std::uint64_t> dims{15 + rng() % 50, 15 + rng() % 50, 15 + rng() % 50};
    auto a = build_alto_as<std::uint64_t>(random_tensor(dims, 50 + rng() % 2000, rng()));
    for (std::size_t l : {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{7},
                          std::size_t{13}, a.nnz()}) {
      check_partition_properties(a, partition(a, l));
    }
  }
}

TEST_CASE("strategy selection by fiber reuse") {
  CHECK(select_strategy(100, 10) == Strategy::Buffered);
  CHECK(select_strategy(100, 50) == Strategy::Atomic);
  CHECK(select_strategy(100, 25) == Strategy::Atomic);  // exactly four
  CHECK(select_strategy(101, 25) == Strategy::Buffered);

  // 100 nonzeros on a 10x50 grid: reuse 10 on mode 1, 2 on mode 2.
  std::vector<std::uint64_t> coords;
  for (std::uint64_t e = 0; e < 100; ++e) {
    coords.push_back(e % 10);
    coords.push_back(e / 2);
  }
  auto a = build_alto_as<std::uint64_t>(
      make_coo({10, 50}, std::move(coords), std::vector<double>(100, 1.0)));
  REQUIRE(a.nnz() == 100);
  auto set = partition(a, 4);
  auto p0 = plan_conflicts(a, set, 0);
  auto p1 = plan_conflicts(a, set, 1);
  CHECK(p0.strategy == Strategy::Buffered);
  CHECK_FALSE(p0.flag_bit.has_value());
  CHECK(p1.strategy == Strategy::Atomic);
  REQUIRE(p1.flag_bit.has_value());
  CHECK(*p1.flag_bit == 62);
  CHECK(*p1.flag_bit >= a.layout.total_bits);
}

TEST_CASE("plan_conflicts on the example") {
  auto a = fig5_alto();
  auto set = partition(a, 2);
  auto plan = plan_conflicts(a, set, 0);
  CHECK(plan.strategy == Strategy::Atomic);  // reuse 1.5
  REQUIRE(plan.overlaps.size() == 2);
  CHECK(plan.overlaps[0] == std::vector<Interval>{{1, 3}});
  CHECK(plan.overlaps[1] == std::vector<Interval>{{1, 3}});
  REQUIRE(plan.flag_bit.has_value());
  CHECK(*plan.flag_bit == 63);

  // Mode 2: [0-3] and [2-6] share rows 2-3.
  auto plan_j = plan_conflicts(a, set, 1);
  CHECK(plan_j.overlaps[0] == std::vector<Interval>{{2, 3}});
  CHECK(plan_j.overlaps[1] == std::vector<Interval>{{2, 3}});

  CHECK_THROWS_AS(plan_conflicts(a, set, 3), ShapeError);
  auto other = partition(fig5_alto(), 3);
  other.nnz = 5;
  CHECK_THROWS_AS(plan_conflicts(a, other, 0), ShapeError);
}

TEST_CASE("overlap sets can be disconnected") {
  // Partition intervals along mode 1: [0-9], [1-2], [8-9] in some order.
  auto t = make_coo({10, 64}, {0, 0, 9, 1, 1, 20, 2, 21, 8, 40, 9, 41}, {1, 1, 1, 1, 1, 1});
  auto a = build_alto_as<std::uint64_t>(t);
  auto set = partition(a, 3);
  auto plan = plan_conflicts(a, set, 0, Strategy::Atomic);
  for (std::size_t l = 0; l < set.count(); ++l) {
    const auto span = set.parts[l].intervals[0];
    // Brute force: row b is shared iff some other interval also covers it.
    std::vector<Interval> expected;
    for (std::uint64_t b = span.lo; b <= span.hi; ++b) {
      bool shared = false;
      for (std::size_t k = 0; k < set.count(); ++k) {
        shared |= k != l && set.parts[k].intervals[0].contains(b);
      }
      if (!shared) continue;
      if (!expected.empty() && expected.back().hi + 1 == b) {
        expected.back().hi = b;
      } else {
        expected.push_back({b, b});
      }
    }
    CHECK(plan.overlaps[l] == expected);
  }
}

TEST_CASE("boundary flags on the example") {
  auto a = fig5_alto();
  auto set = partition(a, 2);
  auto plan = plan_conflicts(a, set, 0);
  auto flagged = apply_boundary_flags(a, set, plan);
  const std::uint64_t bit = std::uint64_t{1} << *plan.flag_bit;

  // (0,3,0) at position 20 is the only element outside rows 1-3.
  std::vector<bool> expect{true, true, false, true, true, true};
  for (std::size_t e = 0; e < a.nnz(); ++e) {
    CHECK(((flagged.indices[e] & bit) != 0) == expect[e]);
    CHECK((flagged.indices[e] ^ (flagged.indices[e] & bit)) == a.indices[e]);
    for (std::size_t n = 0; n < a.order(); ++n) {
      CHECK(flagged.coord(e, n) == a.coord(e, n));
    }
  }
  REQUIRE(flagged.flags[0].has_value());
  CHECK(flagged.flags[0]->partitions == 2);
  CHECK(flagged.flags[0]->bit == *plan.flag_bit);
}

TEST_CASE("a single partition flags nothing") {
  auto a = fig5_alto();
  auto set = partition(a, 1);
  auto plan = plan_conflicts(a, set, 0);
  auto flagged = apply_boundary_flags(a, set, plan);
  CHECK(flagged.indices == a.indices);
}

TEST_CASE("flags need a spare bit and an atomic plan") {
  // 4 modes of 2^16: all 64 bits used.
  std::vector<std::uint64_t> dims(4, 1u << 16);
  auto a = build_alto_as<std::uint64_t>(make_coo(dims, {1, 2, 3, 4, 5, 6, 7, 8}, {1, 2}));
  auto set = partition(a, 2);
  auto plan = plan_conflicts(a, set, 0);
  CHECK(plan.strategy == Strategy::Atomic);
  CHECK_FALSE(plan.flag_bit.has_value());
  CHECK_THROWS_AS(apply_boundary_flags(a, set, plan), ShapeError);

  auto b = fig5_alto();
  auto bset = partition(b, 2);
  auto buffered = plan_conflicts(b, bset, 0, Strategy::Buffered);
  CHECK_THROWS_AS(apply_boundary_flags(b, bset, buffered), ShapeError);
}

TEST_CASE("flagging completeness on random tensors") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::uint64_t> dims{3 + rng() % 200, 3 + rng() % 50, 3 + rng() % 20};
    auto a = build_alto_as<std::uint64_t>(random_tensor(dims, 300 + rng() % 700, rng()));
    for (std::size_t l : {2, 5, 9}) {
      auto set = partition(a, l);
      for (std::size_t mode = 0; mode < a.order(); ++mode) {
        auto plan = plan_conflicts(a, set, mode, Strategy::Atomic);
        auto flagged = apply_boundary_flags(a, set, plan);
        const std::uint64_t bit = std::uint64_t{1} << *plan.flag_bit;
        // Which partitions write each row?
        std::vector<std::vector<std::size_t>> writers(dims[mode]);
        for (std::size_t p = 0; p < set.count(); ++p) {
          for (std::size_t e = set.parts[p].begin; e < set.parts[p].end(); ++e) {
            auto& w = writers[a.coord(e, mode)];
            if (w.empty() || w.back() != p) w.push_back(p);
          }
        }
        for (std::size_t e = 0; e < a.nnz(); ++e) {
          if (writers[a.coord(e, mode)].size() >= 2) CHECK((flagged.indices[e] & bit) != 0);
        }
      }
    }
  }
}

TEST_CASE("container round trip") {
  auto a = AnyAltoTensor{fig5_alto()};
  auto bytes = serialize(a);
  // 8 header + 3 dims + nnz + 3 masks + 6 indices + 6 values, 8 bytes each.
  CHECK(bytes.size() == 8 + 8 * (3 + 1 + 3 + 6 + 6));
  CHECK(std::equal(bytes.begin(), bytes.begin() + 4, "ALTO"));
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 3);
  CHECK(bytes[6] == 64);
  CHECK(deserialize(bytes) == a);

  auto big = build_alto(random_tensor(std::vector<std::uint64_t>{300, 200, 100}, 10000, 8));
  auto big_bytes = serialize(big);
  auto back = deserialize(big_bytes);
  CHECK(back == big);
  CHECK(serialize(back) == big_bytes);

  std::stringstream stream;
  write_alto(stream, big);
  CHECK(read_alto(stream) == big);
}

TEST_CASE("container round trip at 128 bits") {
  std::vector<std::uint64_t> dims{1u << 30, 1u << 30, 1u << 30};
  auto a = build_alto(make_coo(dims, {5, 6, 7, (1u << 30) - 1, 0, 3}, {1.5, -2.0}));
  auto bytes = serialize(a);
  CHECK(bytes[6] == 128);
  CHECK(deserialize(bytes) == a);
}

TEST_CASE("container strips flag bits") {
  auto a = fig5_alto();
  auto set = partition(a, 2);
  auto flagged = apply_boundary_flags(a, set, plan_conflicts(a, set, 0));
  CHECK(serialize(AnyAltoTensor{flagged}) == serialize(AnyAltoTensor{a}));
}

TEST_CASE("container errors") {
  auto bytes = serialize(AnyAltoTensor{fig5_alto()});

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{9}, bytes.size() - 1}) {
    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + cut);
    CHECK_THROWS_AS(deserialize(truncated), FormatError);
  }

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK_THROWS_AS(deserialize(bad_version), FormatError);

  auto bad_width = bytes;
  bad_width[6] = 32;
  CHECK_THROWS_AS(deserialize(bad_width), FormatError);

  auto bad_mask = bytes;
  bad_mask[8 + 8 * 4] ^= 0x1;  // first mask
  CHECK_THROWS_AS(deserialize(bad_mask), FormatError);

  auto unsorted = bytes;
  std::swap_ranges(unsorted.begin() + 64, unsorted.begin() + 72, unsorted.begin() + 72);
  CHECK_THROWS_AS(deserialize(unsorted), FormatError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize(trailing), FormatError);

  auto huge_nnz = bytes;
  huge_nnz[8 + 8 * 3 + 7] = 0x7f;
  CHECK_THROWS_AS(deserialize(huge_nnz), FormatError);
}
