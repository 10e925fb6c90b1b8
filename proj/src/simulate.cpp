#include "stergm/simulate.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stergm {

std::uint64_t SplitMix64::next_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("bound must be positive");
  if (bound == 1) return 0;
  const std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(bound - 1);
  std::uint64_t r;
  do {
    r = next() & mask;
  } while (r >= bound);
  return r;
}

std::uint64_t SplitMix64::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SplitMix64 SplitMix64::substream(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(mix(seed ^ (index + 1) * 0x9E3779B97F4A7C15ULL));
}

AttributeSource AttributeSource::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("cooperation probability must be in [0,1]");
  return AttributeSource{Kind::bernoulli, {}, p, Decision::cooperate};
}

namespace {

void check_sizes(std::span<const double> theta, std::span<const TermSpec> terms) {
  if (theta.size() != terms.size())
    throw std::invalid_argument("coefficient count does not match term count");
}

}  // namespace

SmallGraph sample_space_enumerated(std::span<const double> theta, const SubsetRange& space,
                                   const AttributeTable& attrs, std::span<const TermSpec> terms,
                                   SplitMix64& rng, const EvalOptions& opts) {
  check_sizes(theta, terms);
  if (space.size() > opts.state_budget) throw budget_exceeded(space.size(), opts.state_budget);

  double g[kMaxDyads];
  const auto value = [&](const SmallGraph& y) {
    eval_into(terms, y, attrs, g);
    double v = 0;
    for (std::size_t a = 0; a < theta.size(); ++a) v += theta[a] * g[a];
    return v;
  };

  double vmax = -std::numeric_limits<double>::infinity(), w = 0;
  for (const SmallGraph& y : space) {
    const double v = value(y);
    if (v <= vmax) {
      w += std::exp(v - vmax);
    } else {
      w = w * (vmax == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(vmax - v)) + 1.0;
      vmax = v;
    }
  }
  const double logz = vmax + std::log(w);

  const double u = rng.next_unit();
  double cum = 0;
  SmallGraph last = space.base();
  for (const SmallGraph& y : space) {
    cum += std::exp(value(y) - logz);
    last = y;
    if (u < cum) return y;
  }
  return last;  // u landed in the rounding tail past cum ~ 1
}

SmallGraph sample_space_dyadwise(std::span<const double> theta, const SubsetRange& space,
                                 const AttributeTable& attrs, std::span<const TermSpec> terms,
                                 SplitMix64& rng) {
  check_sizes(theta, terms);
  if (!is_dyadic_independent(terms))
    throw std::invalid_argument("dyadwise sampling requires dyadic-independent terms");
  const SmallGraph& base = space.base();
  std::uint64_t chosen = 0;
  std::uint64_t rest = space.free_mask();
  while (rest) {
    const int k = std::countr_zero(rest);
    rest &= rest - 1;
    const DyadIndex d = dyad_at(k, base.n());
    double eta = 0;
    for (std::size_t a = 0; a < terms.size(); ++a)
      eta += theta[a] * change_statistic(terms[a], base, d, attrs);
    const double p = 1.0 / (1.0 + std::exp(-eta));
    if (rng.next_unit() < p) chosen |= std::uint64_t{1} << k;
  }
  return SmallGraph(base.n(), base.mask() | chosen);
}

SmallGraph sample_formation(std::span<const double> theta_plus, const SmallGraph& y_prev,
                            const AttributeTable& attrs, std::span<const TermSpec> terms,
                            SplitMix64& rng, const EvalOptions& opts) {
  const SubsetRange space = formation_space(y_prev);
  if (is_dyadic_independent(terms)) return sample_space_dyadwise(theta_plus, space, attrs, terms, rng);
  return sample_space_enumerated(theta_plus, space, attrs, terms, rng, opts);
}

SmallGraph sample_persistence(std::span<const double> theta_minus, const SmallGraph& y_prev,
                              const AttributeTable& attrs, std::span<const TermSpec> terms,
                              SplitMix64& rng, const EvalOptions& opts) {
  const SubsetRange space = persistence_space(y_prev);
  if (is_dyadic_independent(terms)) return sample_space_dyadwise(theta_minus, space, attrs, terms, rng);
  return sample_space_enumerated(theta_minus, space, attrs, terms, rng, opts);
}

SmallGraph sample_transition(const ThetaVector& theta, const SmallGraph& y_prev,
                             const AttributeTable& attrs, const ModelSpec& spec, SplitMix64& rng,
                             const EvalOptions& opts) {
  const SmallGraph y_plus = sample_formation(theta.formation, y_prev, attrs, spec.formation, rng, opts);
  const SmallGraph y_minus =
      sample_persistence(theta.persistence, y_prev, attrs, spec.persistence, rng, opts);
  return reconstruct_target(y_plus, y_minus, y_prev);
}

namespace {

void check_config(const SimConfig& c, const WealthRule& rule) {
  if (c.n < 2 || c.n > kMaxNodes) throw std::invalid_argument("node count out of range");
  if (c.initial_ties < 0 || c.initial_ties > dyad_count(c.n))
    throw std::invalid_argument("initial tie count exceeds the number of dyads");
  if (c.transitions < 1) throw std::invalid_argument("at least one transition is required");
  if (c.games < 1) throw std::invalid_argument("at least one game is required");
  if (c.theta.formation.size() != c.spec.formation.size() ||
      c.theta.persistence.size() != c.spec.persistence.size())
    throw std::invalid_argument("coefficient count does not match the model");
  if (rule.cooperate_cost_per_neighbor < 0 || rule.benefit_per_cooperating_neighbor < 0 ||
      rule.initial_wealth < 0)
    throw std::invalid_argument("wealth rule values must be nonnegative");
  const AttributeSource& src = c.attribute_source;
  switch (src.kind) {
    case AttributeSource::Kind::replay: {
      if (src.trajectories.size() != static_cast<std::size_t>(c.games))
        throw std::invalid_argument("replay trajectories must cover every game");
      for (const auto& game : src.trajectories) {
        if (game.size() != static_cast<std::size_t>(c.transitions))
          throw std::invalid_argument("replay trajectories must cover every round");
        for (const auto& round : game)
          if (round.size() != static_cast<std::size_t>(c.n))
            throw std::invalid_argument("replay decision vectors must have one entry per node");
      }
      break;
    }
    case AttributeSource::Kind::bernoulli:
      if (!(src.p_cooperate >= 0.0 && src.p_cooperate <= 1.0))
        throw std::invalid_argument("cooperation probability must be in [0,1]");
      break;
    case AttributeSource::Kind::constant:
      break;
  }
}

// Uniform graph with exactly m edges: partial Fisher-Yates over dyad slots.
SmallGraph initial_graph(int n, int m, SplitMix64& rng) {
  std::array<int, kMaxDyads> slot{};
  const int total = dyad_count(n);
  std::iota(slot.begin(), slot.begin() + total, 0);
  std::uint64_t mask = 0;
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(total - i)));
    std::swap(slot[i], slot[j]);
    mask |= std::uint64_t{1} << slot[i];
  }
  return SmallGraph(n, mask);
}

std::vector<Decision> draw_decisions(const AttributeSource& src, int game, int round, int n,
                                     SplitMix64& rng) {
  switch (src.kind) {
    case AttributeSource::Kind::replay:
      return src.trajectories[static_cast<std::size_t>(game)][static_cast<std::size_t>(round - 1)];
    case AttributeSource::Kind::bernoulli: {
      std::vector<Decision> dec(static_cast<std::size_t>(n));
      for (auto& d : dec) d = rng.next_unit() < src.p_cooperate ? Decision::cooperate : Decision::defect;
      return dec;
    }
    case AttributeSource::Kind::constant:
      return std::vector<Decision>(static_cast<std::size_t>(n), src.constant_value);
  }
  throw std::logic_error("unreachable");
}

}  // namespace

Panel simulate_panel(const SimConfig& config, const WealthRule& rule) {
  check_config(config, rule);
  Panel panel;
  panel.games.reserve(static_cast<std::size_t>(config.games));
  for (int g = 0; g < config.games; ++g) {
    SplitMix64 rng = SplitMix64::substream(config.seed, static_cast<std::uint64_t>(g));
    SmallGraph y = initial_graph(config.n, config.initial_ties, rng);
    AttributeTable attrs = AttributeTable::uniform(config.n, Decision::none, rule.initial_wealth);
    GameRecord game{std::to_string(g), {Snapshot{0, y, attrs}}};

    for (int t = 1; t <= config.transitions; ++t) {
      const std::vector<Decision> dec = draw_decisions(config.attribute_source, g, t, config.n, rng);
      // Payoffs accrue on the ties in place when the round is played.
      const auto adj = y.adjacency();
      std::vector<std::int64_t> wealth = attrs.wealth;
      for (int i = 0; i < config.n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (dec[ui] == Decision::cooperate)
          wealth[ui] -= rule.cooperate_cost_per_neighbor * std::popcount(adj[ui]);
        std::uint16_t nbrs = adj[ui];
        while (nbrs) {
          const int j = std::countr_zero(nbrs);
          nbrs &= static_cast<std::uint16_t>(nbrs - 1);
          if (dec[static_cast<std::size_t>(j)] == Decision::cooperate)
            wealth[ui] += rule.benefit_per_cooperating_neighbor;
        }
      }
      const AttributeTable next_attrs{dec, std::move(wealth)};
      y = sample_transition(config.theta, y, next_attrs, config.spec, rng, config.eval);
      game.snapshots.push_back(Snapshot{t, y, next_attrs});
      attrs = next_attrs;
    }
    panel.games.push_back(std::move(game));
  }
  return panel;
}

}  // namespace stergm
