#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <vector>

#include "stergm/graph.hpp"
#include "stergm/simulate.hpp"

using namespace stergm;

TEST_CASE("dyad index bijection and canonical order") {
  CHECK(dyad_index(0, 1, 6).k == 0);
  CHECK(dyad_index(4, 5, 6).k == 14);
  CHECK(dyad_index(3, 1, 6).k == dyad_index(1, 3, 6).k);

  for (int n = 2; n <= kMaxNodes; ++n) {
    int expect = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const DyadIndex d = dyad_index(i, j, n);
        CHECK(d.i == i);
        CHECK(d.j == j);
        CHECK(d.k == expect);  // strictly increasing in lexicographic (i, j)
        const DyadIndex back = dyad_at(d.k, n);
        CHECK(back.i == i);
        CHECK(back.j == j);
        ++expect;
      }
    }
    CHECK(expect == dyad_count(n));
  }
}

TEST_CASE("dyad index rejects bad input") {
  CHECK_THROWS_AS(dyad_index(0, 0, 5), std::invalid_argument);
  CHECK_THROWS_AS(dyad_index(0, 5, 5), std::invalid_argument);
  CHECK_THROWS_AS(dyad_index(-1, 2, 5), std::invalid_argument);
  CHECK_THROWS_AS(dyad_at(10, 5), std::invalid_argument);
  CHECK_THROWS_AS(dyad_at(-1, 5), std::invalid_argument);
  CHECK_THROWS_AS(SmallGraph(1), std::invalid_argument);
  CHECK_THROWS_AS(SmallGraph(12), std::invalid_argument);
  CHECK_THROWS_AS(SmallGraph(3, 0xFF), std::invalid_argument);  // bits above D
}

TEST_CASE("set operations follow set algebra on dyad masks") {
  const SmallGraph empty = SmallGraph::empty(5);
  const SmallGraph full = SmallGraph::complete(5);
  SplitMix64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const SmallGraph a(5, rng.next() & full.mask());
    const SmallGraph b(5, rng.next() & full.mask());
    const SmallGraph c(5, rng.next() & full.mask());
    CHECK((empty | a) == a);
    CHECK((a & a) == a);
    CHECK((full - empty) == full);
    CHECK((a | b) == (b | a));
    CHECK((a & b) == (b & a));
    CHECK(((a | b) | c) == (a | (b | c)));
    CHECK(((a & b) & c) == (a & (b & c)));
    CHECK((a - b).is_subset_of(a));
  }
  CHECK_THROWS_AS(SmallGraph::empty(4) | SmallGraph::empty(5), std::invalid_argument);
}

TEST_CASE("adjacency matches the edge mask") {
  SplitMix64 rng(11);
  for (int n = 2; n <= 11; ++n) {
    const SmallGraph y = SmallGraph(n, rng.next() & SmallGraph::complete(n).mask());
    const auto adj = y.adjacency();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const bool bit = (adj[static_cast<std::size_t>(i)] >> j) & 1;
        if (i == j)
          CHECK_FALSE(bit);
        else
          CHECK(bit == y.has(dyad_index(i, j, n)));
      }
    }
  }
}

TEST_CASE("split and reconstruct invert each other exhaustively") {
  // All pairs on n = 3 (8 x 8) and n = 4 (64 x 64).
  for (int n = 3; n <= 4; ++n) {
    const std::uint64_t total = std::uint64_t{1} << dyad_count(n);
    for (std::uint64_t prev = 0; prev < total; ++prev) {
      for (std::uint64_t curr = 0; curr < total; ++curr) {
        const SmallGraph y_prev(n, prev), y_curr(n, curr);
        const auto [y_plus, y_minus] = split_transition(y_prev, y_curr);
        CHECK(y_plus == (y_prev | y_curr));
        CHECK(y_minus == (y_prev & y_curr));
        CHECK(y_prev.is_subset_of(y_plus));
        CHECK(y_minus.is_subset_of(y_prev));
        const SmallGraph back = reconstruct_target(y_plus, y_minus, y_prev);
        CHECK(back == y_curr);
        // Both closed forms agree.
        CHECK(back == (y_minus | (y_plus - y_prev)));
        CHECK(back == (y_plus - (y_prev - y_minus)));
      }
    }
  }
}

TEST_CASE("split edge cases") {
  SplitMix64 rng(3);
  const SmallGraph y(4, rng.next() & SmallGraph::complete(4).mask());
  const SmallGraph empty = SmallGraph::empty(4);
  auto [p1, m1] = split_transition(empty, y);
  CHECK(p1 == y);
  CHECK(m1 == empty);
  auto [p2, m2] = split_transition(y, y);
  CHECK(p2 == y);
  CHECK(m2 == y);
  auto [p3, m3] = split_transition(y, empty);
  CHECK(p3 == y);
  CHECK(m3 == empty);
}

TEST_CASE("reconstruct rejects precondition violations") {
  const SmallGraph y_prev(3, 0b011);
  CHECK_THROWS_AS(reconstruct_target(SmallGraph(3, 0b001), SmallGraph(3, 0b001), y_prev),
                  std::invalid_argument);  // y_plus misses a prior tie
  CHECK_THROWS_AS(reconstruct_target(SmallGraph(3, 0b111), SmallGraph(3, 0b100), y_prev),
                  std::invalid_argument);  // y_minus has a non-prior tie
}

namespace {

std::vector<std::uint64_t> collect(const SubsetRange& range) {
  std::vector<std::uint64_t> out;
  for (const SmallGraph& y : range) out.push_back(y.mask());
  return out;
}

}  // namespace

TEST_CASE("formation space enumerates exactly the supersets") {
  // Counting examples.
  const SmallGraph five(6, 0b11111);
  CHECK(formation_space(five).size() == 1024);  // 2^(15-5)
  const SmallGraph k4 = SmallGraph::complete(4);
  const auto only = collect(formation_space(k4));
  REQUIRE(only.size() == 1);
  CHECK(only[0] == k4.mask());

  // Brute-force filter oracle on n = 3, every y_prev.
  for (std::uint64_t prev = 0; prev < 8; ++prev) {
    const SmallGraph y_prev(3, prev);
    std::set<std::uint64_t> expected;
    for (std::uint64_t m = 0; m < 8; ++m)
      if ((m & prev) == prev) expected.insert(m);
    const auto got = collect(formation_space(y_prev));
    CHECK(got.size() == expected.size());
    CHECK(std::set<std::uint64_t>(got.begin(), got.end()) == expected);
    // Deterministic ascending order of the free-dyad bits.
    for (std::size_t a = 1; a < got.size(); ++a) CHECK((got[a] & ~prev) > (got[a - 1] & ~prev));
  }
}

TEST_CASE("persistence space enumerates exactly the subsets") {
  const SmallGraph five(6, 0b11111);
  CHECK(persistence_space(five).size() == 32);
  const auto only = collect(persistence_space(SmallGraph::empty(4)));
  REQUIRE(only.size() == 1);
  CHECK(only[0] == 0);

  for (std::uint64_t prev = 0; prev < 8; ++prev) {
    const SmallGraph y_prev(3, prev);
    std::set<std::uint64_t> expected;
    for (std::uint64_t m = 0; m < 8; ++m)
      if ((m & prev) == m) expected.insert(m);
    const auto got = collect(persistence_space(y_prev));
    CHECK(got.size() == expected.size());
    CHECK(std::set<std::uint64_t>(got.begin(), got.end()) == expected);
    for (std::size_t a = 1; a < got.size(); ++a) CHECK(got[a] > got[a - 1]);
  }
}
