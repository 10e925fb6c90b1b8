#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stergm/graph.hpp"

namespace stergm {

enum class Decision : std::uint8_t { cooperate, defect, none };

char decision_code(Decision d);           // 'C', 'D', 'N'
Decision decision_from_code(char c);      // throws on unknown code

// Per-node decision and wealth at one time point.
struct AttributeTable {
  std::vector<Decision> decision;
  std::vector<std::int64_t> wealth;

  int n() const { return static_cast<int>(decision.size()); }

  static AttributeTable uniform(int n, Decision d, std::int64_t w) {
    return AttributeTable{std::vector<Decision>(n, d), std::vector<std::int64_t>(n, w)};
  }

  // Both sequences must have length n.
  void check(int n_nodes) const;

  friend bool operator==(const AttributeTable&, const AttributeTable&) = default;
};

// One observed (y_prev -> y_curr) step with its formation/persistence split.
// `attrs` is the attribute snapshot recorded at the target time.
struct TransitionView {
  SmallGraph y_prev;
  SmallGraph y_curr;
  AttributeTable attrs;
  SmallGraph y_plus;
  SmallGraph y_minus;

  static TransitionView make(const SmallGraph& y_prev, const SmallGraph& y_curr, AttributeTable attrs);
};

struct Snapshot {
  int t = 0;
  SmallGraph graph;
  AttributeTable attrs;
};

struct GameRecord {
  std::string id;
  std::vector<Snapshot> snapshots;

  int n() const { return snapshots.empty() ? 0 : snapshots.front().graph.n(); }
};

// G games, each a sequence of (time, graph, attributes) snapshots.  Node
// counts may differ across games but not within one.
struct Panel {
  std::vector<GameRecord> games;

  std::size_t transition_count() const;

  // Throws std::invalid_argument describing the first violated invariant:
  // constant n within a game, strictly increasing times, >= 2 snapshots.
  void validate() const;

  // Visits every consecutive snapshot pair as (game_index, target_time, view),
  // games in order, times in order.
  template <typename F>
  void for_each_transition(F&& fn) const {
    for (std::size_t g = 0; g < games.size(); ++g) {
      const auto& snaps = games[g].snapshots;
      for (std::size_t s = 1; s < snaps.size(); ++s) {
        fn(g, snaps[s].t, TransitionView::make(snaps[s - 1].graph, snaps[s].graph, snaps[s].attrs));
      }
    }
  }
};

}  // namespace stergm
