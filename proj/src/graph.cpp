#include "stergm/graph.hpp"

#include <string>

namespace stergm {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw std::invalid_argument(msg); }

void check_n(int n) {
  if (n < 2 || n > kMaxNodes)
    bad("node count must be in [2, " + std::to_string(kMaxNodes) + "], got " + std::to_string(n));
}

}  // namespace

DyadIndex dyad_index(int i, int j, int n) {
  check_n(n);
  if (i < 0 || i >= n || j < 0 || j >= n)
    bad("node id out of range for n=" + std::to_string(n) + ": (" + std::to_string(i) + "," +
        std::to_string(j) + ")");
  if (i == j) bad("dyad endpoints must differ, got node " + std::to_string(i) + " twice");
  if (i > j) std::swap(i, j);
  // Rows of length n-1-i precede row i in lexicographic (i,j) order.
  int k = i * (2 * n - i - 1) / 2 + (j - i - 1);
  return DyadIndex{i, j, k};
}

DyadIndex dyad_at(int k, int n) {
  check_n(n);
  if (k < 0 || k >= dyad_count(n)) bad("dyad index out of range: " + std::to_string(k));
  int i = 0;
  int rest = k;
  while (rest >= n - 1 - i) {
    rest -= n - 1 - i;
    ++i;
  }
  return DyadIndex{i, i + 1 + rest, k};
}

SmallGraph::SmallGraph(int n, std::uint64_t edges) : n_(n), edges_(edges) {
  check_n(n);
  if (edges & ~full_mask()) bad("edge mask has bits beyond the dyad count for n=" + std::to_string(n));
}

SmallGraph SmallGraph::complete(int n) {
  SmallGraph g(n);
  g.edges_ = g.full_mask();
  return g;
}

std::array<std::uint16_t, kMaxNodes> SmallGraph::adjacency() const {
  std::array<std::uint16_t, kMaxNodes> adj{};
  std::uint64_t rest = edges_;
  while (rest) {
    int k = std::countr_zero(rest);
    rest &= rest - 1;
    DyadIndex d = dyad_at(k, n_);
    adj[d.i] |= std::uint16_t(1) << d.j;
    adj[d.j] |= std::uint16_t(1) << d.i;
  }
  return adj;
}

void SmallGraph::check_same_n(const SmallGraph& a, const SmallGraph& b) {
  if (a.n_ != b.n_)
    bad("set operation on graphs of different node counts: " + std::to_string(a.n_) + " vs " +
        std::to_string(b.n_));
}

std::pair<SmallGraph, SmallGraph> split_transition(const SmallGraph& y_prev, const SmallGraph& y_curr) {
  return {y_prev | y_curr, y_prev & y_curr};
}

SmallGraph reconstruct_target(const SmallGraph& y_plus, const SmallGraph& y_minus, const SmallGraph& y_prev) {
  if (!y_prev.is_subset_of(y_plus)) bad("formation graph must contain every prior tie");
  if (!y_minus.is_subset_of(y_prev)) bad("persistence graph must be contained in the prior ties");
  return y_minus | (y_plus - y_prev);
}

SubsetRange formation_space(const SmallGraph& y_prev) {
  return SubsetRange(y_prev, y_prev.full_mask() & ~y_prev.mask());
}

SubsetRange persistence_space(const SmallGraph& y_prev) {
  return SubsetRange(SmallGraph::empty(y_prev.n()), y_prev.mask());
}

}  // namespace stergm
