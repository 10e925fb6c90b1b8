#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "helpers.hpp"
#include "stergm/inference.hpp"
#include "stergm/simulate.hpp"

using namespace stergm;
using namespace testutil;

namespace {

bool panels_equal(const Panel& a, const Panel& b) {
  if (a.games.size() != b.games.size()) return false;
  for (std::size_t g = 0; g < a.games.size(); ++g) {
    const GameRecord &ga = a.games[g], &gb = b.games[g];
    if (ga.id != gb.id || ga.snapshots.size() != gb.snapshots.size()) return false;
    for (std::size_t s = 0; s < ga.snapshots.size(); ++s) {
      const Snapshot &sa = ga.snapshots[s], &sb = gb.snapshots[s];
      if (sa.t != sb.t || sa.graph.mask() != sb.graph.mask()) return false;
      if (sa.attrs.decision != sb.attrs.decision || sa.attrs.wealth != sb.attrs.wealth)
        return false;
    }
  }
  return true;
}

// |freq - p| within 4 sigma of the binomial proportion.
void check_band(double count, double n_draws, double p) {
  const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / n_draws);
  CHECK(std::abs(count / n_draws - p) <= 4 * sigma);
}

}  // namespace

TEST_CASE("SplitMix64 matches the published reference sequence") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
  CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(rng.next() == 0x06C45D188009454FULL);

  SplitMix64 rng42(42);
  CHECK(rng42.next() == 0xBDD732262FEB6E95ULL);
  CHECK(rng42.next() == 0x28EFE333B266F103ULL);
}

TEST_CASE("uniform and bounded draws") {
  SplitMix64 rng(51);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK_THROWS_AS(rng.next_below(0), std::invalid_argument);
  for (int i = 0; i < 100; ++i) CHECK(rng.next_below(1) == 0);
  std::array<int, 7> counts{};
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) {
    const std::uint64_t v = rng.next_below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) check_band(c, draws, 1.0 / 7.0);
}

TEST_CASE("substreams are decorrelated and stable") {
  // The substream for game g depends only on (seed, g), so a game's record is
  // unchanged when more games are appended to the run.
  SimConfig sim;
  sim.n = 5;
  sim.games = 1;
  sim.transitions = 3;
  sim.initial_ties = 4;
  sim.seed = 99;
  sim.spec = ModelSpec{{TermSpec::edges()}, {TermSpec::edges()}};
  sim.theta = ThetaVector{{0.2}, {0.4}};
  sim.attribute_source = AttributeSource::bernoulli(0.5);

  const Panel one = simulate_panel(sim);
  sim.games = 3;
  const Panel three = simulate_panel(sim);
  REQUIRE(three.games.size() == 3);
  CHECK(panels_equal(one, Panel{{three.games[0]}}));
  CHECK_FALSE(panels_equal(Panel{{three.games[1]}}, Panel{{three.games[2]}}));
}

TEST_CASE("simulation is deterministic in the seed") {
  SimConfig sim;
  sim.n = 6;
  sim.games = 4;
  sim.transitions = 5;
  sim.seed = 7;
  sim.spec = ModelSpec{{TermSpec::edges(), TermSpec::node_match("decision", Decision::cooperate)},
                       {TermSpec::edges()}};
  sim.theta = ThetaVector{{-0.3, 0.5}, {0.6}};
  sim.attribute_source = AttributeSource::bernoulli(0.4);

  const Panel a = simulate_panel(sim);
  const Panel b = simulate_panel(sim);
  CHECK(panels_equal(a, b));

  sim.seed = 8;
  CHECK_FALSE(panels_equal(a, simulate_panel(sim)));

  a.validate();  // simulator output satisfies every panel invariant
  CHECK(a.transition_count() == 20);
}

TEST_CASE("initial graphs have exactly the requested ties") {
  SimConfig sim;
  sim.n = 6;
  sim.games = 2000;
  sim.transitions = 1;
  sim.initial_ties = 5;
  sim.seed = 13;
  sim.attribute_source = AttributeSource::constant(Decision::none);

  const Panel panel = simulate_panel(sim);
  int dyad0 = 0;
  for (const GameRecord& game : panel.games) {
    const Snapshot& start = game.snapshots.front();
    CHECK(start.t == 0);
    CHECK(start.graph.edge_count() == 5);
    for (int i = 0; i < 6; ++i) {
      CHECK(start.attrs.decision[i] == Decision::none);
      CHECK(start.attrs.wealth[i] == 500);
    }
    if (start.graph.has(0, 1)) ++dyad0;
  }
  // Uniformity spot check: each dyad is included with probability 5/15.
  check_band(dyad0, sim.games, 5.0 / 15.0);

  sim.games = 3;
  sim.initial_ties = 0;
  CHECK(simulate_panel(sim).games[0].snapshots[0].graph.edge_count() == 0);
  sim.initial_ties = 15;
  CHECK(simulate_panel(sim).games[0].snapshots[0].graph.mask() ==
        SmallGraph::complete(6).mask());
}

TEST_CASE("zero-coefficient formation turns each free dyad on half the time") {
  const SmallGraph y_prev = SmallGraph::empty(5);
  const AttributeTable attrs = flat_attrs(5);
  const std::vector<TermSpec> terms{TermSpec::edges()};
  const std::vector<double> zero{0.0};
  SplitMix64 rng(52);

  const int draws = 100000;
  std::array<int, 10> on{};
  for (int d = 0; d < draws; ++d) {
    const SmallGraph y = sample_formation(zero, y_prev, attrs, terms, rng);
    for (int k = 0; k < 10; ++k)
      if (y.mask() >> k & 1) ++on[k];
  }
  for (int k = 0; k < 10; ++k) CHECK(std::abs(on[k] / double(draws) - 0.5) < 0.006);
}

TEST_CASE("singleton spaces are returned unchanged") {
  SplitMix64 rng(53);
  const SmallGraph k5 = SmallGraph::complete(5);
  const AttributeTable attrs = flat_attrs(5);
  const std::vector<TermSpec> tri{TermSpec::triangles()};
  const std::vector<TermSpec> edges{TermSpec::edges()};
  for (int i = 0; i < 50; ++i) {
    CHECK(sample_formation(std::vector<double>{0.3}, k5, attrs, tri, rng).mask() == k5.mask());
    CHECK(sample_formation(std::vector<double>{0.3}, k5, attrs, edges, rng).mask() == k5.mask());
    CHECK(sample_persistence(std::vector<double>{-0.2}, SmallGraph::empty(5), attrs, edges, rng)
              .edge_count() == 0);
  }
}

TEST_CASE("a -30 edge coefficient behaves like negative infinity") {
  const SmallGraph y_prev(6, 0b11111);  // 5 ties, 10 free dyads
  const AttributeTable attrs = flat_attrs(6);
  const std::vector<TermSpec> edges{TermSpec::edges()};
  const std::vector<double> frozen{-30.0};
  SplitMix64 rng(54);
  const int draws = 100000;
  long added = 0;
  for (int d = 0; d < draws; ++d)
    added += sample_formation(frozen, y_prev, attrs, edges, rng).edge_count() - 5;
  CHECK(added / double(draws * 10) < 1e-4);
}

TEST_CASE("both samplers are uniform at zero coefficients") {
  const SmallGraph y_prev(4, 0b000011);  // 4 free dyads -> 16 formation states
  const AttributeTable attrs = flat_attrs(4);
  const std::vector<TermSpec> edges{TermSpec::edges()};
  const std::vector<double> zero{0.0};
  const int draws = 100000;

  auto gof_uniform = [&](auto&& draw_one) {
    std::vector<int> counts(64, 0);
    SplitMix64 rng(55);
    for (int d = 0; d < draws; ++d) ++counts[draw_one(rng).mask()];
    double x2 = 0;
    int states = 0;
    const double expect = draws / 16.0;
    for (std::uint64_t m = 0; m < 64; ++m) {
      const bool in_space = (m & 0b000011) == 0b000011;
      if (!in_space) {
        CHECK(counts[m] == 0);
        continue;
      }
      ++states;
      x2 += (counts[m] - expect) * (counts[m] - expect) / expect;
    }
    REQUIRE(states == 16);
    CHECK(chisq_sf(x2, 15) > 0.01);
  };

  gof_uniform([&](SplitMix64& rng) {
    return sample_space_enumerated(zero, formation_space(y_prev), attrs, edges, rng);
  });
  gof_uniform([&](SplitMix64& rng) {
    return sample_space_dyadwise(zero, formation_space(y_prev), attrs, edges, rng);
  });
}

TEST_CASE("dyadwise and enumerated samplers both match exact state probabilities") {
  const SmallGraph y_prev(4, 0b001100);
  const AttributeTable attrs = attrs_of("CCDN", {400, 500, 600, 700});
  const std::vector<TermSpec> terms{TermSpec::edges(),
                                    TermSpec::node_match("decision", Decision::cooperate)};
  const std::vector<double> theta{-0.4, 0.9};
  const int draws = 30000;

  // Exact probabilities by direct normalization.
  const double logc = formation_normalizer(theta, y_prev, attrs, terms);
  std::vector<double> p(64, 0.0);
  for (const SmallGraph& y : formation_space(y_prev)) {
    double v = 0;
    const StatVector g = eval_vector(terms, y, attrs);
    for (std::size_t k = 0; k < theta.size(); ++k) v += theta[k] * g[k];
    p[y.mask()] = std::exp(v - logc);
  }

  auto check_sampler = [&](auto&& draw_one, std::uint64_t seed) {
    std::vector<int> counts(64, 0);
    SplitMix64 rng(seed);
    for (int d = 0; d < draws; ++d) ++counts[draw_one(rng).mask()];
    for (std::uint64_t m = 0; m < 64; ++m)
      if (p[m] > 0) check_band(counts[m], draws, p[m]);
  };

  check_sampler(
      [&](SplitMix64& rng) {
        return sample_space_enumerated(theta, formation_space(y_prev), attrs, terms, rng);
      },
      561);
  check_sampler(
      [&](SplitMix64& rng) {
        return sample_space_dyadwise(theta, formation_space(y_prev), attrs, terms, rng);
      },
      562);

  // The dyadwise path refuses dyad-dependent terms.
  SplitMix64 rng(563);
  CHECK_THROWS_AS(sample_space_dyadwise(std::vector<double>{0.1}, formation_space(y_prev), attrs,
                                        std::vector<TermSpec>{TermSpec::triangles()}, rng),
                  std::invalid_argument);
}

TEST_CASE("transition draws follow the exact transition distribution") {
  const SmallGraph y_prev(3, 0b011);
  const AttributeTable attrs = flat_attrs(3);
  const ModelSpec spec{{TermSpec::edges()}, {TermSpec::edges()}};
  const ThetaVector theta{{0.7}, {-0.4}};
  const int draws = 20000;

  std::array<int, 8> counts{};
  SplitMix64 rng(57);
  for (int d = 0; d < draws; ++d)
    ++counts[sample_transition(theta, y_prev, attrs, spec, rng).mask()];

  for (std::uint64_t m = 0; m < 8; ++m) {
    const TransitionView tv = TransitionView::make(y_prev, SmallGraph(3, m), attrs);
    const double p = std::exp(transition_loglik(theta, tv, spec));
    check_band(counts[m], draws, p);
  }
}

TEST_CASE("sampled statistic means match exact expectations at n=5") {
  const SmallGraph y_prev(5, 0b0000111011);  // 5 ties, 5 free dyads
  const AttributeTable attrs = attrs_of("CDCDN", {450, 500, 550, 600, 650});
  const ModelSpec spec{{TermSpec::edges(), TermSpec::triangles()}, {TermSpec::edges()}};
  const ThetaVector theta{{-0.3, 0.4}, {0.5}};

  // Exact expectations from the evaluator (independent of the y_curr used to
  // make the panel well-formed).
  const Panel panel = panel_of({{Snapshot{0, y_prev, attrs}, Snapshot{1, y_prev, attrs}}});
  const LogLikReport rep = PanelEvaluator(panel, spec).report(theta);
  REQUIRE(rep.expected_stats.size() == 1);

  const int draws = 100000;
  std::vector<double> sum(3, 0), sumsq(3, 0);
  SplitMix64 rng(58);
  for (int d = 0; d < draws; ++d) {
    const SmallGraph yp = sample_formation(theta.formation, y_prev, attrs, spec.formation, rng);
    const SmallGraph ym =
        sample_persistence(theta.persistence, y_prev, attrs, spec.persistence, rng);
    const StatVector gf = eval_vector(spec.formation, yp, attrs);
    const StatVector gp = eval_vector(spec.persistence, ym, attrs);
    const double obs[3] = {gf[0], gf[1], gp[0]};
    for (int k = 0; k < 3; ++k) {
      sum[k] += obs[k];
      sumsq[k] += obs[k] * obs[k];
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double mean = sum[k] / draws;
    const double var = sumsq[k] / draws - mean * mean;
    const double mc_se = std::sqrt(var / draws);
    CHECK(std::abs(mean - rep.expected_stats[0][k]) <= 3 * mc_se);
  }
}

TEST_CASE("payoff accounting follows the game rules exactly") {
  SimConfig sim;
  sim.n = 6;
  sim.games = 3;
  sim.transitions = 4;
  sim.initial_ties = 6;
  sim.seed = 59;
  sim.spec = ModelSpec{{TermSpec::edges()}, {TermSpec::edges()}};
  sim.theta = ThetaVector{{0.1}, {0.3}};
  sim.attribute_source = AttributeSource::bernoulli(0.6);
  const WealthRule rule;  // 50 / 100 / 500

  const Panel panel = simulate_panel(sim, rule);
  for (const GameRecord& game : panel.games) {
    for (std::size_t s = 1; s < game.snapshots.size(); ++s) {
      const Snapshot& prev = game.snapshots[s - 1];
      const Snapshot& curr = game.snapshots[s];
      const auto adj = prev.graph.adjacency();
      long long delta_total = 0;
      for (int i = 0; i < 6; ++i) {
        // Recompute node i's wealth change from the round's decisions and the
        // ties in place when the round was played.
        long long w = prev.attrs.wealth[i];
        if (curr.attrs.decision[i] == Decision::cooperate)
          w -= rule.cooperate_cost_per_neighbor * std::popcount(adj[i]);
        for (int j = 0; j < 6; ++j)
          if (j != i && prev.graph.has(std::min(i, j), std::max(i, j)) &&
              curr.attrs.decision[j] == Decision::cooperate)
            w += rule.benefit_per_cooperating_neighbor;
        CHECK(curr.attrs.wealth[i] == w);
        delta_total += curr.attrs.wealth[i] - prev.attrs.wealth[i];
      }
      // Net creation: 50 per (cooperator, neighbor) slot.
      long long coop_degree = 0;
      for (int i = 0; i < 6; ++i)
        if (curr.attrs.decision[i] == Decision::cooperate) coop_degree += std::popcount(adj[i]);
      CHECK(delta_total == 50 * coop_degree);
    }
  }

  // All-cooperate: every node nets +50 per neighbor.
  sim.attribute_source = AttributeSource::constant(Decision::cooperate);
  sim.games = 1;
  const Panel coop = simulate_panel(sim, rule);
  const GameRecord& game = coop.games[0];
  for (std::size_t s = 1; s < game.snapshots.size(); ++s) {
    const auto adj = game.snapshots[s - 1].graph.adjacency();
    for (int i = 0; i < 6; ++i)
      CHECK(game.snapshots[s].attrs.wealth[i] ==
            game.snapshots[s - 1].attrs.wealth[i] + 50 * std::popcount(adj[i]));
  }

  // Nobody ever acts: wealth never moves.
  sim.attribute_source = AttributeSource::constant(Decision::none);
  const Panel idle = simulate_panel(sim, rule);
  for (const Snapshot& snap : idle.games[0].snapshots)
    for (int i = 0; i < 6; ++i) CHECK(snap.attrs.wealth[i] == 500);
}

TEST_CASE("replayed decision trajectories are reproduced verbatim") {
  SimConfig sim;
  sim.n = 4;
  sim.games = 2;
  sim.transitions = 3;
  sim.initial_ties = 2;
  sim.seed = 60;
  sim.attribute_source = AttributeSource::bernoulli(0.5);
  const Panel source = simulate_panel(sim);

  std::vector<std::vector<std::vector<Decision>>> traj;
  for (const GameRecord& game : source.games) {
    std::vector<std::vector<Decision>> rounds;
    for (std::size_t s = 1; s < game.snapshots.size(); ++s)
      rounds.push_back(game.snapshots[s].attrs.decision);
    traj.push_back(std::move(rounds));
  }

  sim.attribute_source = AttributeSource::replay(traj);
  sim.seed = 61;  // different network draws, same decisions
  const Panel replayed = simulate_panel(sim);
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t s = 1; s < replayed.games[g].snapshots.size(); ++s)
      CHECK(replayed.games[g].snapshots[s].attrs.decision == traj[g][s - 1]);

  // Shape violations are rejected.
  sim.attribute_source = AttributeSource::replay({traj[0]});  // one game too few
  CHECK_THROWS_AS(simulate_panel(sim), std::invalid_argument);
  auto short_rounds = traj;
  short_rounds[1].pop_back();
  sim.attribute_source = AttributeSource::replay(short_rounds);
  CHECK_THROWS_AS(simulate_panel(sim), std::invalid_argument);
  auto short_nodes = traj;
  short_nodes[0][0].pop_back();
  sim.attribute_source = AttributeSource::replay(short_nodes);
  CHECK_THROWS_AS(simulate_panel(sim), std::invalid_argument);
}

TEST_CASE("configuration validation") {
  SimConfig ok;
  ok.attribute_source = AttributeSource::constant(Decision::none);
  CHECK_NOTHROW(simulate_panel(ok));

  auto expect_throw = [&](auto&& mutate) {
    SimConfig bad = ok;
    mutate(bad);
    CHECK_THROWS_AS(simulate_panel(bad), std::invalid_argument);
  };
  expect_throw([](SimConfig& c) { c.n = 1; });
  expect_throw([](SimConfig& c) { c.n = 12; });
  expect_throw([](SimConfig& c) { c.initial_ties = 16; });  // n=6 has 15 dyads
  expect_throw([](SimConfig& c) { c.initial_ties = -1; });
  expect_throw([](SimConfig& c) { c.transitions = 0; });
  expect_throw([](SimConfig& c) { c.games = 0; });
  expect_throw([](SimConfig& c) { c.theta = ThetaVector{{0.5}, {}}; });  // spec has no terms
  expect_throw([](SimConfig& c) { c.attribute_source = AttributeSource{}; });  // replay, no data

  CHECK_THROWS_AS(AttributeSource::bernoulli(1.5), std::invalid_argument);
  CHECK_THROWS_AS(AttributeSource::bernoulli(-0.1), std::invalid_argument);

  WealthRule negative;
  negative.cooperate_cost_per_neighbor = -5;
  CHECK_THROWS_AS(simulate_panel(ok, negative), std::invalid_argument);

  // Enumeration budgets apply to sampling too.
  SplitMix64 rng(62);
  EvalOptions tiny;
  tiny.state_budget = 8;
  CHECK_THROWS_AS(sample_space_enumerated(std::vector<double>{0.0},
                                          formation_space(SmallGraph::empty(5)), flat_attrs(5),
                                          std::vector<TermSpec>{TermSpec::edges()}, rng, tiny),
                  budget_exceeded);
}
