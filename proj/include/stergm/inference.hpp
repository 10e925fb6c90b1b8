#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stergm/likelihood.hpp"

namespace stergm {

// Whether the MLE for a coordinate exists: a summed observed statistic on its
// sample-space minimum drives the coefficient to -infinity, on its maximum to
// +infinity.
enum class Existence : std::uint8_t { ok, at_lower_boundary, at_upper_boundary };

struct FitConfig {
  ThetaVector init;              // empty -> all zeros
  double grad_tol = 1e-8;        // infinity-norm convergence threshold
  int max_iters = 500;
  double param_cap = 25.0;       // |theta_k| beyond this counts as divergence
  bool existence_check = true;
  EvalOptions eval;
};

struct FitResult {
  ModelSpec spec;
  ThetaVector theta_hat;               // +/-infinity for boundary coordinates
  std::vector<double> se;              // NaN when flagged or information singular
  Matrix cov;                          // inverse Fisher information at theta_hat
  double loglik = 0;
  double residual_deviance = 0;        // -2 * loglik
  std::size_t n_params = 0;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0;                // infinity norm over non-flagged coordinates
  std::vector<Existence> existence;    // d+ then d-
  bool singular_information = false;
  std::optional<std::string> panel_digest;  // set by callers that know the source data

  bool any_boundary() const {
    for (Existence e : existence)
      if (e != Existence::ok) return true;
    return false;
  }
};

struct WaldRow {
  std::size_t index = 0;  // position in the stacked parameter vector
  std::string side;       // "formation" or "persistence"
  std::string term;
  double estimate = 0;
  double se = 0;
  double z = 0;
  double p = 0;
  std::string stars;  // "*" p<0.05, "**" p<0.01, "***" p<0.001
};

struct LrTestResult {
  double deviance = 0;
  unsigned df = 0;
  double p_value = 1;
};

// BFGS ascent on the exact panel log-likelihood from theta = config.init.
// Boundary statistics (when existence_check is on) are flagged before
// optimization and their coordinates excluded from the search; the reported
// estimate for them is the divergence direction, not a finite number.
FitResult maximize(const PanelEvaluator& eval, const FitConfig& config = {});
FitResult maximize(const Panel& panel, const ModelSpec& spec, const FitConfig& config = {});

// One row per parameter whose MLE exists and whose SE is available.
std::vector<WaldRow> wald_tests(const FitResult& fit);

// Upper-tail probability of the chi-square distribution with df > 0.
double chisq_sf(double x, unsigned df);

// Deviance test of a nested pair fit to the same panel: reduced's terms must
// be contained, side by side, in full's.
LrTestResult lr_test(const FitResult& fit_reduced, const FitResult& fit_full);

struct PerTimeFit {
  int t = 0;  // target time of the transitions in this slice
  std::optional<FitResult> fit;
  std::string error;  // non-empty when the slice could not be fit
};

// Refits the model on each transition time separately (all games' t-1 -> t
// steps).  A failing slice records its error and does not abort the rest.
std::vector<PerTimeFit> fit_per_time(const Panel& panel, const ModelSpec& spec,
                                     const FitConfig& config = {});

}  // namespace stergm
