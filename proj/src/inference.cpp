#include "stergm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

namespace stergm {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
// Value a boundary coordinate is pinned at while the free ones are optimized:
// far enough that the offending states carry relative weight under 1e-13, so
// the free-coordinate optimum matches the limiting (conditional) MLE to well
// below every tolerance in use.
constexpr double kBoundaryPin = 30.0;

const TermSpec& term_at(const ModelSpec& spec, std::size_t k) {
  return k < spec.formation.size() ? spec.formation[k] : spec.persistence[k - spec.formation.size()];
}

// Count-valued statistics sit exactly on integers, so boundary detection is an
// equality; AbsDiff accumulates rounding, so it gets a small tolerance.
bool on_bound(const TermSpec& term, double observed, double bound) {
  if (term.kind == TermKind::abs_diff) return std::abs(observed - bound) <= 1e-9;
  return observed == bound;
}

std::vector<Existence> detect_existence(const PanelEvaluator& eval) {
  const StatBounds b = eval.bounds();
  std::vector<Existence> flags(b.observed.size(), Existence::ok);
  for (std::size_t k = 0; k < flags.size(); ++k) {
    const TermSpec& term = term_at(eval.spec(), k);
    if (b.lower[k] < b.upper[k] || !on_bound(term, b.observed[k], b.upper[k])) {
      if (on_bound(term, b.observed[k], b.upper[k]))
        flags[k] = Existence::at_upper_boundary;
      else if (on_bound(term, b.observed[k], b.lower[k]))
        flags[k] = Existence::at_lower_boundary;
    } else {
      // Constant statistic: observed equals both extremes; direction is moot
      // but the coefficient is unidentified, so it must be flagged.
      flags[k] = Existence::at_upper_boundary;
    }
  }
  return flags;
}

// Maps between the full stacked parameter vector and the unflagged subset.
struct FreeMap {
  std::vector<std::size_t> idx;  // free position -> stacked position
  std::vector<double> pinned;    // full-length base vector with boundary pins

  explicit FreeMap(const std::vector<Existence>& flags) : pinned(flags.size(), 0.0) {
    for (std::size_t k = 0; k < flags.size(); ++k) {
      switch (flags[k]) {
        case Existence::ok: idx.push_back(k); break;
        case Existence::at_lower_boundary: pinned[k] = -kBoundaryPin; break;
        case Existence::at_upper_boundary: pinned[k] = kBoundaryPin; break;
      }
    }
  }

  std::vector<double> expand(const Eigen::VectorXd& x) const {
    std::vector<double> full = pinned;
    for (std::size_t f = 0; f < idx.size(); ++f) full[idx[f]] = x[static_cast<Eigen::Index>(f)];
    return full;
  }

  Eigen::VectorXd restrict(const std::vector<double>& full) const {
    Eigen::VectorXd x(idx.size());
    for (std::size_t f = 0; f < idx.size(); ++f) x[static_cast<Eigen::Index>(f)] = full[idx[f]];
    return x;
  }
};

struct Evaluation {
  double value = 0;        // -loglik
  Eigen::VectorXd grad;    // over free coordinates
};

struct LineSearchResult {
  double alpha = 0;
  Evaluation at;
  bool ok = false;
};

// Strong Wolfe line search (sufficient decrease c1, curvature c2) on
// phi(a) = f(x + a p); every probe evaluates value and gradient together.
template <typename EvalFn>
LineSearchResult wolfe_search(const EvalFn& evaluate, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& p, double phi0, double dphi0) {
  constexpr double c1 = 1e-4, c2 = 0.9;
  const auto probe = [&](double a) {
    LineSearchResult r;
    r.alpha = a;
    r.at = evaluate(x + a * p);
    r.ok = true;
    return r;
  };
  const auto wolfe_ok = [&](const LineSearchResult& r) {
    const double dphi = r.at.grad.dot(p);
    return r.at.value <= phi0 + c1 * r.alpha * dphi0 && std::abs(dphi) <= -c2 * dphi0;
  };

  // zoom keeps [lo, hi] bracketing a Wolfe point, bisecting until found.
  const auto zoom = [&](LineSearchResult lo, LineSearchResult hi) {
    for (int i = 0; i < 64; ++i) {
      LineSearchResult mid = probe(0.5 * (lo.alpha + hi.alpha));
      if (mid.at.value > phi0 + c1 * mid.alpha * dphi0 || mid.at.value >= lo.at.value) {
        hi = mid;
      } else {
        if (wolfe_ok(mid)) return mid;
        const double dphi = mid.at.grad.dot(p);
        if (dphi * (hi.alpha - lo.alpha) >= 0) hi = lo;
        lo = mid;
      }
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
    }
    // Interval collapsed without meeting the curvature condition; the best
    // point still decreases the objective, which preserves ascent.
    return lo;
  };

  LineSearchResult prev;  // alpha = 0
  prev.alpha = 0;
  prev.at.value = phi0;
  double alpha = 1.0;
  for (int i = 0; i < 40; ++i) {
    LineSearchResult cur = probe(alpha);
    if (cur.at.value > phi0 + c1 * alpha * dphi0 || (i > 0 && cur.at.value >= prev.at.value))
      return zoom(prev, cur);
    if (wolfe_ok(cur)) return cur;
    if (cur.at.grad.dot(p) >= 0) return zoom(cur, prev);
    prev = cur;
    alpha *= 2.0;
  }
  return probe(alpha);  // pathological; caller checks progress
}

std::string side_name(const ModelSpec& spec, std::size_t k) {
  return k < spec.formation.size() ? "formation" : "persistence";
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::string star_band(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace

FitResult maximize(const PanelEvaluator& eval, const FitConfig& config) {
  if (config.grad_tol <= 0 || config.max_iters < 1 || config.param_cap <= 0)
    throw std::invalid_argument("fit configuration out of range");
  const ModelSpec& spec = eval.spec();
  const std::size_t d = spec.param_count();

  FitResult fit;
  fit.spec = spec;
  fit.n_params = d;
  fit.existence.assign(d, Existence::ok);
  if (config.existence_check) fit.existence = detect_existence(eval);

  ThetaVector init = config.init;
  if (init.size() == 0 && d > 0) init = ThetaVector::zeros(spec);
  if (init.formation.size() != spec.formation.size() ||
      init.persistence.size() != spec.persistence.size())
    throw std::invalid_argument("initial coefficients do not match the model");

  const FreeMap fm(fit.existence);
  const auto evaluate = [&](const Eigen::VectorXd& x) {
    Evaluation e;
    std::vector<double> grad_full;
    const ThetaVector theta = ThetaVector::from_stacked(fm.expand(x), spec);
    e.value = -eval.loglik_grad(theta, grad_full);
    for (double& g : grad_full) g = -g;
    e.grad = fm.restrict(grad_full);
    return e;
  };

  const std::size_t nf = fm.idx.size();
  Eigen::VectorXd x = fm.restrict(init.stacked());
  // Pins override any user-supplied initial value on flagged coordinates.
  Evaluation cur = evaluate(x);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(nf, nf);
  bool first_update = true;
  bool diverged = false;

  int iter = 0;
  for (; iter < config.max_iters; ++iter) {
    if (cur.grad.size() == 0 || cur.grad.lpNorm<Eigen::Infinity>() <= config.grad_tol) {
      fit.converged = true;
      break;
    }
    Eigen::VectorXd p = -(h_inv * cur.grad);
    double dphi0 = p.dot(cur.grad);
    if (!(dphi0 < 0)) {  // lost positive definiteness; restart steepest descent
      h_inv.setIdentity();
      first_update = true;
      p = -cur.grad;
      dphi0 = p.dot(cur.grad);
    }
    const LineSearchResult ls = wolfe_search(evaluate, x, p, cur.value, dphi0);
    if (!(ls.alpha > 0) || !(ls.at.value < cur.value)) break;  // no progress possible

    const Eigen::VectorXd x_new = x + ls.alpha * p;
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = ls.at.grad - cur.grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (first_update) {
        h_inv = (sy / y.dot(y)) * Eigen::MatrixXd::Identity(nf, nf);
        first_update = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h_inv * y;
      h_inv += (rho * rho * (y.dot(hy)) + rho) * (s * s.transpose()) -
               rho * (hy * s.transpose() + s * hy.transpose());
    }
    x = x_new;
    cur = ls.at;
    if (x.size() > 0 && x.lpNorm<Eigen::Infinity>() >= config.param_cap) {
      diverged = true;
      ++iter;
      break;
    }
  }
  // Near the optimum the remaining decrease of -loglik drops below double
  // resolution, so the Wolfe search can no longer certify strict progress even
  // though the exact gradient still exceeds grad_tol.  Finish with Newton
  // steps on the exact information matrix, accepting on gradient-norm
  // decrease alone.
  if (!fit.converged && !diverged && nf > 0) {
    for (; iter < config.max_iters; ++iter) {
      if (cur.grad.lpNorm<Eigen::Infinity>() <= config.grad_tol) break;
      const LogLikReport rep = eval.report(ThetaVector::from_stacked(fm.expand(x), spec));
      Eigen::MatrixXd info(nf, nf);
      for (std::size_t a = 0; a < nf; ++a)
        for (std::size_t b = 0; b < nf; ++b)
          info(a, b) = rep.fisher_info(fm.idx[a], fm.idx[b]);
      const Eigen::LLT<Eigen::MatrixXd> llt(info);
      if (llt.info() != Eigen::Success) break;
      const Eigen::VectorXd step = llt.solve(cur.grad);
      bool improved = false;
      double scale = 1.0;
      for (int half = 0; half < 8 && !improved; ++half, scale *= 0.5) {
        const Evaluation trial = evaluate(x - scale * step);
        if (trial.grad.lpNorm<Eigen::Infinity>() < cur.grad.lpNorm<Eigen::Infinity>()) {
          x -= scale * step;
          cur = trial;
          improved = true;
        }
      }
      if (!improved) break;
      if (x.lpNorm<Eigen::Infinity>() >= config.param_cap) {
        diverged = true;
        ++iter;
        break;
      }
    }
    if (!diverged && (cur.grad.size() == 0 ||
                      cur.grad.lpNorm<Eigen::Infinity>() <= config.grad_tol))
      fit.converged = true;
  }
  fit.iterations = iter;
  if (diverged) fit.converged = false;

  // Final accounting at the solution (flagged coordinates held at their pins).
  const ThetaVector theta_pin = ThetaVector::from_stacked(fm.expand(x), spec);
  const LogLikReport rep = eval.report(theta_pin);
  fit.loglik = rep.loglik;
  fit.residual_deviance = -2.0 * rep.loglik;
  fit.grad_norm = 0;
  for (std::size_t f = 0; f < nf; ++f)
    fit.grad_norm = std::max(fit.grad_norm, std::abs(rep.gradient[fm.idx[f]]));

  auto stacked = theta_pin.stacked();
  for (std::size_t k = 0; k < d; ++k) {
    if (fit.existence[k] == Existence::at_lower_boundary) stacked[k] = -kInf;
    if (fit.existence[k] == Existence::at_upper_boundary) stacked[k] = kInf;
  }
  fit.theta_hat = ThetaVector::from_stacked(stacked, spec);

  fit.cov = Matrix(d, d);
  for (auto& v : fit.cov.data) v = kNan;
  fit.se.assign(d, kNan);
  if (nf > 0) {
    Eigen::MatrixXd info(nf, nf);
    for (std::size_t a = 0; a < nf; ++a)
      for (std::size_t b = 0; b < nf; ++b) info(a, b) = rep.fisher_info(fm.idx[a], fm.idx[b]);
    // Eigendecomposition rather than a plain Cholesky: an exactly singular
    // information matrix (e.g. duplicated terms) must be detected reliably,
    // not inverted against rounding noise.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
    const Eigen::VectorXd& lambda = es.eigenvalues();
    const double lmax = lambda(nf - 1);
    if (lmax <= 0 || lambda(0) <= 0 || lambda(0) / lmax < 1e-12) {
      fit.singular_information = true;
    } else {
      Eigen::MatrixXd cov =
          es.eigenvectors() * lambda.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
      cov = ((cov + cov.transpose()) / 2.0).eval();  // exact symmetry
      for (std::size_t a = 0; a < nf; ++a) {
        for (std::size_t b = 0; b < nf; ++b) fit.cov(fm.idx[a], fm.idx[b]) = cov(a, b);
        fit.se[fm.idx[a]] = std::sqrt(cov(a, a));
      }
    }
  }
  return fit;
}

FitResult maximize(const Panel& panel, const ModelSpec& spec, const FitConfig& config) {
  return maximize(PanelEvaluator(panel, spec, config.eval), config);
}

std::vector<WaldRow> wald_tests(const FitResult& fit) {
  std::vector<WaldRow> rows;
  const auto est = fit.theta_hat.stacked();
  for (std::size_t k = 0; k < fit.n_params; ++k) {
    if (fit.existence[k] != Existence::ok || !std::isfinite(fit.se[k])) continue;
    WaldRow row;
    row.index = k;
    row.side = side_name(fit.spec, k);
    row.term = render_term(term_at(fit.spec, k));
    row.estimate = est[k];
    row.se = fit.se[k];
    row.z = row.estimate / row.se;
    row.p = normal_two_sided_p(row.z);
    row.stars = star_band(row.p);
    rows.push_back(std::move(row));
  }
  return rows;
}

double chisq_sf(double x, unsigned df) {
  if (df == 0) throw std::invalid_argument("chi-square test requires df > 0");
  if (x < 0) throw std::invalid_argument("chi-square statistic must be nonnegative");
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

namespace {

// Every term of `inner` must occur in `outer`, with multiplicity.
bool terms_contained(const std::vector<TermSpec>& inner, const std::vector<TermSpec>& outer) {
  std::vector<bool> used(outer.size(), false);
  for (const TermSpec& t : inner) {
    bool found = false;
    for (std::size_t j = 0; j < outer.size(); ++j) {
      if (!used[j] && outer[j] == t) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace

LrTestResult lr_test(const FitResult& fit_reduced, const FitResult& fit_full) {
  if (fit_reduced.panel_digest && fit_full.panel_digest &&
      *fit_reduced.panel_digest != *fit_full.panel_digest)
    throw std::invalid_argument("the two models were fitted to different panels");
  if (!terms_contained(fit_reduced.spec.formation, fit_full.spec.formation) ||
      !terms_contained(fit_reduced.spec.persistence, fit_full.spec.persistence))
    throw std::invalid_argument("reduced model is not nested in the full model");

  LrTestResult out;
  out.df = static_cast<unsigned>(fit_full.n_params - fit_reduced.n_params);
  out.deviance = fit_reduced.residual_deviance - fit_full.residual_deviance;
  if (out.deviance < 0) {
    if (out.deviance < -1e-8)
      throw std::runtime_error("nested model fits better than the full model; optimizer failure");
    out.deviance = 0;
  }
  // chi-square with 0 df degenerates to a point mass at 0; deviances inside
  // the numerical slack count as zero there.
  out.p_value = out.df == 0 ? (out.deviance > 1e-8 ? 0.0 : 1.0) : chisq_sf(out.deviance, out.df);
  return out;
}

std::vector<PerTimeFit> fit_per_time(const Panel& panel, const ModelSpec& spec,
                                     const FitConfig& config) {
  panel.validate();
  // Group all (t-1 -> t) steps by target time, each as a two-snapshot game.
  std::map<int, Panel> slices;
  for (const GameRecord& game : panel.games)
    for (std::size_t j = 1; j < game.snapshots.size(); ++j)
      slices[game.snapshots[j].t].games.push_back(
          GameRecord{game.id, {game.snapshots[j - 1], game.snapshots[j]}});

  std::vector<PerTimeFit> out;
  out.reserve(slices.size());
  for (auto& [t, slice] : slices) {
    PerTimeFit result;
    result.t = t;
    try {
      result.fit = maximize(slice, spec, config);
    } catch (const std::exception& err) {
      result.error = err.what();
    }
    out.push_back(std::move(result));
  }
  return out;
}

}  // namespace stergm
