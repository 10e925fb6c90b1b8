#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stergm/matrix.hpp"
#include "stergm/panel.hpp"
#include "stergm/terms.hpp"

namespace stergm {

// Formation and persistence coefficients; lengths must match the ModelSpec.
struct ThetaVector {
  std::vector<double> formation;
  std::vector<double> persistence;

  std::size_t size() const { return formation.size() + persistence.size(); }
  std::vector<double> stacked() const;
  static ThetaVector zeros(const ModelSpec& spec);
  static ThetaVector from_stacked(std::span<const double> packed, const ModelSpec& spec);
};

struct LogLikReport {
  double loglik = 0;
  std::vector<double> gradient;                    // d+ then d-
  std::vector<std::vector<double>> expected_stats; // per transition, d+ then d-
  Matrix fisher_info;                              // (d+ + d-)^2, block diagonal
};

// Per-parameter extremes of the summed observed-side statistic over the
// product of per-transition sample spaces, plus the observed totals.
struct StatBounds {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> observed;
};

// A sample space larger than the configured state budget.
class budget_exceeded : public std::runtime_error {
 public:
  budget_exceeded(std::uint64_t states, std::uint64_t budget)
      : std::runtime_error("sample space of " + std::to_string(states) +
                           " states exceeds the enumeration budget of " + std::to_string(budget)),
        states_(states), budget_(budget) {}
  std::uint64_t states() const { return states_; }
  std::uint64_t budget() const { return budget_; }

 private:
  std::uint64_t states_, budget_;
};

struct EvalOptions {
  std::uint64_t state_budget = std::uint64_t{1} << 24;  // hard cap per normalizer
  std::uint64_t cache_states = std::uint64_t{1} << 16;  // per-side statistic-table cache threshold
  int threads = 0;                                      // 0 = all hardware threads
};

// log c+ / log c-: log-sum-exp of theta.g over the side's sample space,
// accumulated with a running max shift in the deterministic enumeration order.
double formation_normalizer(std::span<const double> theta_plus, const SmallGraph& y_prev,
                            const AttributeTable& attrs, std::span<const TermSpec> terms,
                            const EvalOptions& opts = {});
double persistence_normalizer(std::span<const double> theta_minus, const SmallGraph& y_prev,
                              const AttributeTable& attrs, std::span<const TermSpec> terms,
                              const EvalOptions& opts = {});

// Exact log P(y_curr | y_prev): formation and persistence log-masses summed.
double transition_loglik(const ThetaVector& theta, const TransitionView& tv, const ModelSpec& spec,
                         const EvalOptions& opts = {});

// Per-dyad logistic factorization; valid only when every term on both sides
// is dyadic-independent (contract violation otherwise).
double dyadic_fastpath_loglik(const ThetaVector& theta, const TransitionView& tv, const ModelSpec& spec);

// Single-model combined form with the stacked parameter and the statistic
// pair evaluated at (y_prev | w, y_prev & w), normalized over all 2^D
// candidate graphs w.  Equals transition_loglik up to roundoff; costs 2^D.
double tergm_combined_loglik(const ThetaVector& theta, const TransitionView& tv, const ModelSpec& spec,
                             const EvalOptions& opts = {});

// Caches per-transition sample-space statistic tables so repeated evaluation
// at new theta (optimizer iterations) costs only dot products.  Sides whose
// space exceeds cache_states are re-enumerated per call; the math and the
// summation order are identical either way.
class PanelEvaluator {
 public:
  PanelEvaluator(const Panel& panel, const ModelSpec& spec, EvalOptions opts = {});
  ~PanelEvaluator();
  PanelEvaluator(PanelEvaluator&&) noexcept;
  PanelEvaluator& operator=(PanelEvaluator&&) noexcept;

  std::size_t transition_count() const;
  const ModelSpec& spec() const;

  double loglik(const ThetaVector& theta) const;
  // Log-likelihood plus its gradient (d+ then d-), skipping the second-moment
  // work report() does for the Fisher information.
  double loglik_grad(const ThetaVector& theta, std::vector<double>& grad) const;
  LogLikReport report(const ThetaVector& theta) const;

  // Summed observed statistics, d+ then d-.
  const std::vector<double>& observed_totals() const;
  StatBounds bounds() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Sum of transition_loglik over all (game, time) transitions, with the exact
// gradient (observed minus expected statistics) and Fisher information
// (summed per-transition statistic covariances).  Deterministic summation
// order regardless of thread count.
LogLikReport panel_loglik(const ThetaVector& theta, const Panel& panel, const ModelSpec& spec,
                          const EvalOptions& opts = {});

StatBounds stat_bounds(const Panel& panel, const ModelSpec& spec, const EvalOptions& opts = {});

}  // namespace stergm
