#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace stergm {

// Undirected labeled graphs on up to kMaxNodes nodes, stored as a bitmask
// over the D = n(n-1)/2 dyads {i,j}, i < j.  D <= 55 fits one 64-bit word.
inline constexpr int kMaxNodes = 11;
inline constexpr int kMaxDyads = kMaxNodes * (kMaxNodes - 1) / 2;

constexpr int dyad_count(int n) { return n * (n - 1) / 2; }

// A dyad {i,j} (i < j) together with its linear index k.  The canonical
// order is lexicographic in (i,j): (0,1), (0,2), ..., (n-2,n-1).
struct DyadIndex {
  int i = 0;
  int j = 1;
  int k = 0;
};

// Canonical index of the dyad {i,j}; argument order does not matter.
// Throws std::invalid_argument for out-of-range nodes or i == j.
DyadIndex dyad_index(int i, int j, int n);

// Inverse of dyad_index: the dyad at linear index k.
DyadIndex dyad_at(int k, int n);

class SmallGraph {
 public:
  explicit SmallGraph(int n, std::uint64_t edges = 0);

  static SmallGraph empty(int n) { return SmallGraph(n); }
  static SmallGraph complete(int n);

  int n() const { return n_; }
  int dyad_count() const { return stergm::dyad_count(n_); }
  std::uint64_t mask() const { return edges_; }
  std::uint64_t full_mask() const { return (std::uint64_t{1} << dyad_count()) - 1; }
  int edge_count() const { return std::popcount(edges_); }

  bool has(const DyadIndex& d) const { return edges_ >> d.k & 1; }
  bool has(int i, int j) const { return has(dyad_index(i, j, n_)); }

  SmallGraph with(const DyadIndex& d) const { return SmallGraph(n_, edges_ | std::uint64_t{1} << d.k); }
  SmallGraph without(const DyadIndex& d) const { return SmallGraph(n_, edges_ & ~(std::uint64_t{1} << d.k)); }

  bool is_subset_of(const SmallGraph& other) const {
    return n_ == other.n_ && (edges_ & ~other.edges_) == 0;
  }

  // Per-node neighbor bitmasks (bit j of adjacency()[i] set iff {i,j} present).
  std::array<std::uint16_t, kMaxNodes> adjacency() const;

  friend bool operator==(const SmallGraph&, const SmallGraph&) = default;

  friend SmallGraph operator|(const SmallGraph& a, const SmallGraph& b) {
    check_same_n(a, b);
    return SmallGraph(a.n_, a.edges_ | b.edges_);
  }
  friend SmallGraph operator&(const SmallGraph& a, const SmallGraph& b) {
    check_same_n(a, b);
    return SmallGraph(a.n_, a.edges_ & b.edges_);
  }
  friend SmallGraph operator-(const SmallGraph& a, const SmallGraph& b) {
    check_same_n(a, b);
    return SmallGraph(a.n_, a.edges_ & ~b.edges_);
  }

 private:
  static void check_same_n(const SmallGraph& a, const SmallGraph& b);

  int n_;
  std::uint64_t edges_;
};

// The (formation, persistence) pair (y_prev | y_curr, y_prev & y_curr).
std::pair<SmallGraph, SmallGraph> split_transition(const SmallGraph& y_prev, const SmallGraph& y_curr);

// Rebuilds the target graph from a formation/persistence pair:
// y_minus | (y_plus - y_prev), which equals y_plus - (y_prev - y_minus)
// whenever y_plus >= y_prev >= y_minus.  Violated preconditions throw.
SmallGraph reconstruct_target(const SmallGraph& y_plus, const SmallGraph& y_minus, const SmallGraph& y_prev);

// All graphs base | s for submasks s of `free_dyads`, in ascending numeric
// order of s.  Deterministic; size() == 2^popcount(free_dyads).
class SubsetRange {
 public:
  SubsetRange(const SmallGraph& base, std::uint64_t free_dyads)
      : base_(base), free_(free_dyads) {}

  std::uint64_t size() const { return std::uint64_t{1} << std::popcount(free_); }
  const SmallGraph& base() const { return base_; }
  std::uint64_t free_mask() const { return free_; }

  class iterator {
   public:
    using value_type = SmallGraph;
    using difference_type = std::int64_t;

    iterator() = default;
    iterator(const SubsetRange* range, std::uint64_t index, std::uint64_t sub)
        : range_(range), index_(index), sub_(sub) {}

    SmallGraph operator*() const { return SmallGraph(range_->base_.n(), range_->base_.mask() | sub_); }
    iterator& operator++() {
      sub_ = (sub_ - range_->free_) & range_->free_;
      ++index_;
      return *this;
    }
    iterator operator++(int) {
      iterator saved = *this;
      ++*this;
      return saved;
    }
    friend bool operator==(const iterator& a, const iterator& b) { return a.index_ == b.index_; }

   private:
    const SubsetRange* range_ = nullptr;
    std::uint64_t index_ = 0;
    std::uint64_t sub_ = 0;
  };

  iterator begin() const { return iterator(this, 0, 0); }
  iterator end() const { return iterator(this, size(), 0); }

 private:
  SmallGraph base_;
  std::uint64_t free_;
};

// The 2^(D - |y_prev|) supersets of y_prev.
SubsetRange formation_space(const SmallGraph& y_prev);

// The 2^|y_prev| subsets of y_prev.
SubsetRange persistence_space(const SmallGraph& y_prev);

}  // namespace stergm
