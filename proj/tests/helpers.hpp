#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stergm/panel.hpp"
#include "stergm/simulate.hpp"

namespace testutil {

using namespace stergm;

inline AttributeTable attrs_of(const std::string& codes, std::vector<std::int64_t> wealth) {
  AttributeTable a;
  for (const char c : codes) a.decision.push_back(decision_from_code(c));
  a.wealth = std::move(wealth);
  return a;
}

inline AttributeTable flat_attrs(int n) { return AttributeTable::uniform(n, Decision::none, 500); }

inline SmallGraph random_graph(SplitMix64& rng, int n) {
  return SmallGraph(n, rng.next() & SmallGraph::complete(n).mask());
}

inline AttributeTable random_attrs(SplitMix64& rng, int n) {
  AttributeTable a;
  for (int i = 0; i < n; ++i) {
    a.decision.push_back(static_cast<Decision>(rng.next_below(3)));
    a.wealth.push_back(static_cast<std::int64_t>(rng.next_below(2001)) - 500);
  }
  return a;
}

inline Panel panel_of(std::vector<std::vector<Snapshot>> games) {
  Panel p;
  int id = 0;
  for (auto& snaps : games) p.games.push_back(GameRecord{std::to_string(id++), std::move(snaps)});
  return p;
}

// Deterministic panel with random graphs and attributes; independent of the
// model-based simulator so likelihood tests do not depend on it.
inline Panel random_panel(SplitMix64& rng, int games, int transitions, int n) {
  Panel p;
  for (int g = 0; g < games; ++g) {
    GameRecord game{std::to_string(g), {}};
    for (int t = 0; t <= transitions; ++t)
      game.snapshots.push_back(Snapshot{t, random_graph(rng, n), random_attrs(rng, n)});
    p.games.push_back(std::move(game));
  }
  return p;
}

inline std::vector<double> random_theta(SplitMix64& rng, std::size_t d, double half_width) {
  std::vector<double> out(d);
  for (auto& v : out) v = (2.0 * rng.next_unit() - 1.0) * half_width;
  return out;
}

}  // namespace testutil
