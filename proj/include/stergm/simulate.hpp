#pragma once

#include <cstdint>
#include <vector>

#include "stergm/likelihood.hpp"

namespace stergm {

// SplitMix64 (Steele, Lea & Flood 2014): tiny, fast, and fully specified, so
// seeded panels reproduce bit-for-bit across platforms.  Game g of a
// simulation uses the substream derived from (seed, g); see substream().
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound); unbiased via bitmask rejection.
  std::uint64_t next_below(std::uint64_t bound);

  // Finalizer step alone: a bijective 64-bit mix.
  static std::uint64_t mix(std::uint64_t x);

  // Generator for substream `index` of `seed`:
  // SplitMix64(mix(seed ^ (index + 1) * 0x9E3779B97F4A7C15)).
  static SplitMix64 substream(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t state_;
};

// Payoff bookkeeping per round: a cooperator pays cost * degree, and every
// node gains benefit per cooperating neighbor, all measured on the ties in
// place when the round is played.
struct WealthRule {
  std::int64_t cooperate_cost_per_neighbor = 50;
  std::int64_t benefit_per_cooperating_neighbor = 100;
  std::int64_t initial_wealth = 500;
};

// Where each round's decision vector comes from.  Decisions are inputs to the
// network model, not modeled; bernoulli/constant exist so synthetic studies
// can run without observed trajectories.
struct AttributeSource {
  enum class Kind : std::uint8_t { replay, bernoulli, constant };

  Kind kind = Kind::replay;
  // replay: trajectories[game][round - 1][node] for rounds 1..transitions.
  std::vector<std::vector<std::vector<Decision>>> trajectories;
  double p_cooperate = 0.5;                     // bernoulli
  Decision constant_value = Decision::cooperate;  // constant

  static AttributeSource replay(std::vector<std::vector<std::vector<Decision>>> t) {
    return AttributeSource{Kind::replay, std::move(t), 0.5, Decision::cooperate};
  }
  static AttributeSource bernoulli(double p);
  static AttributeSource constant(Decision value) {
    return AttributeSource{Kind::constant, {}, 0.5, value};
  }
};

struct SimConfig {
  int n = 6;
  int initial_ties = 5;
  int transitions = 7;
  int games = 1;
  std::uint64_t seed = 0;
  ThetaVector theta;
  ModelSpec spec;
  AttributeSource attribute_source;  // replay by default; needs trajectories
  EvalOptions eval;
};

// Exact draw from the Gibbs measure exp(theta . g(y)) over an arbitrary
// subset space: enumerate, normalize, invert the CDF at one uniform.
SmallGraph sample_space_enumerated(std::span<const double> theta, const SubsetRange& space,
                                   const AttributeTable& attrs, std::span<const TermSpec> terms,
                                   SplitMix64& rng, const EvalOptions& opts = {});

// Exact draw when every term is dyadic-independent: each free dyad is an
// independent Bernoulli with logistic log-odds theta . (change statistic),
// consumed in ascending dyad order.
SmallGraph sample_space_dyadwise(std::span<const double> theta, const SubsetRange& space,
                                 const AttributeTable& attrs, std::span<const TermSpec> terms,
                                 SplitMix64& rng);

// Draws from the formation distribution given y_prev (supersets of y_prev).
// Uses the dyadwise path when the terms allow it, else full enumeration.
SmallGraph sample_formation(std::span<const double> theta_plus, const SmallGraph& y_prev,
                            const AttributeTable& attrs, std::span<const TermSpec> terms,
                            SplitMix64& rng, const EvalOptions& opts = {});

// Draws from the persistence distribution given y_prev (subsets of y_prev).
SmallGraph sample_persistence(std::span<const double> theta_minus, const SmallGraph& y_prev,
                              const AttributeTable& attrs, std::span<const TermSpec> terms,
                              SplitMix64& rng, const EvalOptions& opts = {});

// Independent formation and persistence draws combined into the next graph.
SmallGraph sample_transition(const ThetaVector& theta, const SmallGraph& y_prev,
                             const AttributeTable& attrs, const ModelSpec& spec, SplitMix64& rng,
                             const EvalOptions& opts = {});

// Full synthetic panel: per game, an exactly-initial_ties-edge starting graph,
// then `transitions` rounds of (decisions, payoffs, network transition).
// Within a round the substream is consumed in that order; see README for the
// reproducibility contract.
Panel simulate_panel(const SimConfig& config, const WealthRule& rule = {});

}  // namespace stergm
