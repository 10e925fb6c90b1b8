#include "stergm/panel.hpp"

#include <stdexcept>

namespace stergm {

char decision_code(Decision d) {
  switch (d) {
    case Decision::cooperate: return 'C';
    case Decision::defect: return 'D';
    case Decision::none: return 'N';
  }
  throw std::logic_error("corrupt Decision value");
}

Decision decision_from_code(char c) {
  switch (c) {
    case 'C': return Decision::cooperate;
    case 'D': return Decision::defect;
    case 'N': return Decision::none;
  }
  throw std::invalid_argument(std::string("unknown decision code '") + c + "', expected C, D or N");
}

void AttributeTable::check(int n_nodes) const {
  if (static_cast<int>(decision.size()) != n_nodes || static_cast<int>(wealth.size()) != n_nodes)
    throw std::invalid_argument("attribute arrays must have length " + std::to_string(n_nodes));
}

TransitionView TransitionView::make(const SmallGraph& y_prev, const SmallGraph& y_curr, AttributeTable attrs) {
  if (y_prev.n() != y_curr.n())
    throw std::invalid_argument("transition endpoints have different node counts");
  attrs.check(y_prev.n());
  auto [y_plus, y_minus] = split_transition(y_prev, y_curr);
  return TransitionView{y_prev, y_curr, std::move(attrs), y_plus, y_minus};
}

std::size_t Panel::transition_count() const {
  std::size_t total = 0;
  for (const auto& game : games)
    if (game.snapshots.size() > 1) total += game.snapshots.size() - 1;
  return total;
}

void Panel::validate() const {
  for (std::size_t g = 0; g < games.size(); ++g) {
    const auto& game = games[g];
    const std::string where = "game " + (game.id.empty() ? std::to_string(g) : game.id);
    if (game.snapshots.size() < 2)
      throw std::invalid_argument(where + ": needs at least 2 snapshots");
    const int n = game.snapshots.front().graph.n();
    int prev_t = game.snapshots.front().t;
    game.snapshots.front().attrs.check(n);
    for (std::size_t s = 1; s < game.snapshots.size(); ++s) {
      const auto& snap = game.snapshots[s];
      if (snap.graph.n() != n)
        throw std::invalid_argument(where + ": node count changes between snapshots");
      if (snap.t <= prev_t)
        throw std::invalid_argument(where + ": time indices must be strictly increasing");
      snap.attrs.check(n);
      prev_t = snap.t;
    }
  }
}

}  // namespace stergm
