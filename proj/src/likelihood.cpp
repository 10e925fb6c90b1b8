#include "stergm/likelihood.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace stergm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_theta(std::span<const double> theta, std::span<const TermSpec> terms, const char* side) {
  if (theta.size() != terms.size())
    throw std::invalid_argument(std::string(side) + " coefficient count " + std::to_string(theta.size()) +
                                " does not match term count " + std::to_string(terms.size()));
  for (double v : theta)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(side) + " coefficients must be finite");
}

double dot(std::span<const double> a, const double* b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Streaming log-sum-exp with a running max shift, optionally carrying first
// (order >= 1) and second (order >= 2) moments of the statistic vector under
// the unnormalized weights.  Accumulation order is the caller's enumeration
// order.
class MomentAccumulator {
 public:
  MomentAccumulator(std::size_t d, int order)
      : d_(d), order_(order), s1_(order >= 1 ? d : 0, 0.0),
        s2_(order >= 2 ? d * (d + 1) / 2 : 0, 0.0) {}

  void add(double v, const double* g) {
    double e;
    if (v <= vmax_) {
      e = std::exp(v - vmax_);
      w_ += e;
    } else {
      const double r = vmax_ == kNegInf ? 0.0 : std::exp(vmax_ - v);
      w_ = w_ * r + 1.0;
      for (auto& x : s1_) x *= r;
      for (auto& x : s2_) x *= r;
      vmax_ = v;
      e = 1.0;
    }
    if (order_ >= 1) {
      for (std::size_t a = 0; a < d_; ++a) s1_[a] += e * g[a];
      if (order_ >= 2) {
        std::size_t idx = 0;
        for (std::size_t a = 0; a < d_; ++a)
          for (std::size_t b = a; b < d_; ++b) s2_[idx++] += e * g[a] * g[b];
      }
    }
  }

  double log_norm() const { return vmax_ + std::log(w_); }

  void mean_into(double* out) const {
    for (std::size_t a = 0; a < d_; ++a) out[a] = s1_[a] / w_;
  }

  // cov(a,b) = E[g_a g_b] - E[g_a] E[g_b], packed upper triangle.
  void cov_into(double* out) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < d_; ++a)
      for (std::size_t b = a; b < d_; ++b, ++idx)
        out[idx] = s2_[idx] / w_ - (s1_[a] / w_) * (s1_[b] / w_);
  }

 private:
  std::size_t d_;
  int order_;
  double vmax_ = kNegInf;
  double w_ = 0.0;
  std::vector<double> s1_;
  std::vector<double> s2_;
};

void check_budget(std::uint64_t states, const EvalOptions& opts) {
  if (states > opts.state_budget) throw budget_exceeded(states, opts.state_budget);
}

// Enumerates one side's sample space, feeding every state's statistics into
// the accumulator.
void accumulate_side(std::span<const double> theta, std::span<const TermSpec> terms,
                     const SubsetRange& space, const AttributeTable& attrs, MomentAccumulator& acc) {
  double g[kMaxDyads];  // d <= number of terms, far below this
  for (const SmallGraph& y : space) {
    eval_into(terms, y, attrs, g);
    acc.add(dot(theta, g), g);
  }
}

int resolve_threads(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  return static_cast<int>(std::min<std::size_t>(n, jobs));
}

// Runs fn(i) for i in [0, count) across workers; exceptions are rethrown on
// the calling thread.  Callers reduce per-index results in index order.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const int workers = resolve_threads(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<double> ThetaVector::stacked() const {
  std::vector<double> out;
  out.reserve(size());
  out.insert(out.end(), formation.begin(), formation.end());
  out.insert(out.end(), persistence.begin(), persistence.end());
  return out;
}

ThetaVector ThetaVector::zeros(const ModelSpec& spec) {
  return ThetaVector{std::vector<double>(spec.formation.size(), 0.0),
                     std::vector<double>(spec.persistence.size(), 0.0)};
}

ThetaVector ThetaVector::from_stacked(std::span<const double> packed, const ModelSpec& spec) {
  if (packed.size() != spec.param_count())
    throw std::invalid_argument("stacked coefficient length does not match the model");
  const auto split = packed.begin() + static_cast<std::ptrdiff_t>(spec.formation.size());
  return ThetaVector{{packed.begin(), split}, {split, packed.end()}};
}

double formation_normalizer(std::span<const double> theta_plus, const SmallGraph& y_prev,
                            const AttributeTable& attrs, std::span<const TermSpec> terms,
                            const EvalOptions& opts) {
  check_theta(theta_plus, terms, "formation");
  const SubsetRange space = formation_space(y_prev);
  check_budget(space.size(), opts);
  MomentAccumulator acc(terms.size(), 0);
  accumulate_side(theta_plus, terms, space, attrs, acc);
  return acc.log_norm();
}

double persistence_normalizer(std::span<const double> theta_minus, const SmallGraph& y_prev,
                              const AttributeTable& attrs, std::span<const TermSpec> terms,
                              const EvalOptions& opts) {
  check_theta(theta_minus, terms, "persistence");
  const SubsetRange space = persistence_space(y_prev);
  check_budget(space.size(), opts);
  MomentAccumulator acc(terms.size(), 0);
  accumulate_side(theta_minus, terms, space, attrs, acc);
  return acc.log_norm();
}

double transition_loglik(const ThetaVector& theta, const TransitionView& tv, const ModelSpec& spec,
                         const EvalOptions& opts) {
  const double num_f = dot(theta.formation, eval_vector(spec.formation, tv.y_plus, tv.attrs).data());
  const double num_p = dot(theta.persistence, eval_vector(spec.persistence, tv.y_minus, tv.attrs).data());
  const double logc_f = formation_normalizer(theta.formation, tv.y_prev, tv.attrs, spec.formation, opts);
  const double logc_p = persistence_normalizer(theta.persistence, tv.y_prev, tv.attrs, spec.persistence, opts);
  return num_f - logc_f + num_p - logc_p;
}

namespace {

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double fastpath_side(std::span<const double> theta, std::span<const TermSpec> terms,
                     const SmallGraph& y_prev, const SmallGraph& y_side, std::uint64_t free_dyads,
                     const AttributeTable& attrs) {
  if (!is_dyadic_independent(terms))
    throw std::invalid_argument("dyadic fast path called with a dyad-dependent term");
  double ll = 0;
  std::uint64_t rest = free_dyads;
  while (rest) {
    const int k = std::countr_zero(rest);
    rest &= rest - 1;
    const DyadIndex d = dyad_at(k, y_prev.n());
    double log_odds = 0;
    for (std::size_t a = 0; a < terms.size(); ++a)
      log_odds += theta[a] * change_statistic(terms[a], y_prev, d, attrs);
    const bool present = y_side.mask() >> k & 1;
    ll += (present ? log_odds : 0.0) - log1pexp(log_odds);
  }
  return ll;
}

}  // namespace

double dyadic_fastpath_loglik(const ThetaVector& theta, const TransitionView& tv, const ModelSpec& spec) {
  check_theta(theta.formation, spec.formation, "formation");
  check_theta(theta.persistence, spec.persistence, "persistence");
  const std::uint64_t free_formation = tv.y_prev.full_mask() & ~tv.y_prev.mask();
  return fastpath_side(theta.formation, spec.formation, tv.y_prev, tv.y_plus, free_formation, tv.attrs) +
         fastpath_side(theta.persistence, spec.persistence, tv.y_prev, tv.y_minus, tv.y_prev.mask(), tv.attrs);
}

double tergm_combined_loglik(const ThetaVector& theta, const TransitionView& tv, const ModelSpec& spec,
                             const EvalOptions& opts) {
  check_theta(theta.formation, spec.formation, "formation");
  check_theta(theta.persistence, spec.persistence, "persistence");
  const SmallGraph& y_prev = tv.y_prev;
  const int n = y_prev.n();
  const std::uint64_t total = std::uint64_t{1} << y_prev.dyad_count();
  check_budget(total, opts);

  const auto stacked_value = [&](std::uint64_t w_mask) {
    const SmallGraph w(n, w_mask);
    const double vf = dot(theta.formation, eval_vector(spec.formation, y_prev | w, tv.attrs).data());
    const double vp = dot(theta.persistence, eval_vector(spec.persistence, y_prev & w, tv.attrs).data());
    return vf + vp;
  };

  MomentAccumulator acc(0, 0);
  for (std::uint64_t w = 0; w < total; ++w) acc.add(stacked_value(w), nullptr);
  return stacked_value(tv.y_curr.mask()) - acc.log_norm();
}

// ---------------------------------------------------------------------------
// PanelEvaluator

struct PanelEvaluator::Impl {
  struct Side {
    SmallGraph base;
    std::uint64_t free_mask = 0;
    std::uint64_t n_states = 1;
    std::vector<double> g_obs;   // observed statistics on this side
    std::vector<double> table;   // n_states x d row-major, empty when streaming

    Side() : base(2) {}
    SubsetRange space() const { return SubsetRange(base, free_mask); }
  };

  struct Transition {
    AttributeTable attrs;
    Side formation;
    Side persistence;
  };

  ModelSpec spec;
  EvalOptions opts;
  std::vector<Transition> transitions;
  std::vector<double> observed_totals;

  Side make_side(const SmallGraph& base, std::uint64_t free_mask, const SmallGraph& observed,
                 const AttributeTable& attrs, std::span<const TermSpec> terms) const {
    Side side;
    side.base = base;
    side.free_mask = free_mask;
    side.n_states = std::uint64_t{1} << std::popcount(free_mask);
    check_budget(side.n_states, opts);
    side.g_obs = eval_vector(terms, observed, attrs);
    if (side.n_states <= opts.cache_states) {
      side.table.resize(side.n_states * terms.size());
      double* row = side.table.data();
      for (const SmallGraph& y : side.space()) {
        eval_into(terms, y, attrs, row);
        row += terms.size();
      }
    }
    return side;
  }

  // Feeds one side's states into the accumulator, from the cached table when
  // present, re-enumerating otherwise.  Same order either way.
  void accumulate(const Side& side, const AttributeTable& attrs, std::span<const TermSpec> terms,
                  std::span<const double> theta, MomentAccumulator& acc) const {
    if (!side.table.empty()) {
      const double* row = side.table.data();
      for (std::uint64_t s = 0; s < side.n_states; ++s, row += terms.size())
        acc.add(dot(theta, row), row);
    } else {
      accumulate_side(theta, terms, side.space(), attrs, acc);
    }
  }
};

PanelEvaluator::PanelEvaluator(const Panel& panel, const ModelSpec& spec, EvalOptions opts)
    : impl_(std::make_unique<Impl>()) {
  panel.validate();
  impl_->spec = spec;
  impl_->opts = opts;
  impl_->transitions.reserve(panel.transition_count());
  panel.for_each_transition([&](std::size_t, int, const TransitionView& tv) {
    Impl::Transition tr{tv.attrs, {}, {}};
    tr.formation = impl_->make_side(tv.y_prev, tv.y_prev.full_mask() & ~tv.y_prev.mask(), tv.y_plus,
                                    tv.attrs, spec.formation);
    tr.persistence = impl_->make_side(SmallGraph::empty(tv.y_prev.n()), tv.y_prev.mask(), tv.y_minus,
                                      tv.attrs, spec.persistence);
    impl_->transitions.push_back(std::move(tr));
  });
  impl_->observed_totals.assign(spec.param_count(), 0.0);
  const std::size_t df = spec.formation.size();
  for (const auto& tr : impl_->transitions) {
    for (std::size_t a = 0; a < df; ++a) impl_->observed_totals[a] += tr.formation.g_obs[a];
    for (std::size_t a = 0; a < spec.persistence.size(); ++a)
      impl_->observed_totals[df + a] += tr.persistence.g_obs[a];
  }
}

PanelEvaluator::~PanelEvaluator() = default;
PanelEvaluator::PanelEvaluator(PanelEvaluator&&) noexcept = default;
PanelEvaluator& PanelEvaluator::operator=(PanelEvaluator&&) noexcept = default;

std::size_t PanelEvaluator::transition_count() const { return impl_->transitions.size(); }
const ModelSpec& PanelEvaluator::spec() const { return impl_->spec; }
const std::vector<double>& PanelEvaluator::observed_totals() const { return impl_->observed_totals; }

double PanelEvaluator::loglik(const ThetaVector& theta) const {
  const Impl& im = *impl_;
  check_theta(theta.formation, im.spec.formation, "formation");
  check_theta(theta.persistence, im.spec.persistence, "persistence");
  std::vector<double> partial(im.transitions.size());
  parallel_for(im.transitions.size(), im.opts.threads, [&](std::size_t i) {
    const auto& tr = im.transitions[i];
    MomentAccumulator acc_f(0, 0), acc_p(0, 0);
    im.accumulate(tr.formation, tr.attrs, im.spec.formation, theta.formation, acc_f);
    im.accumulate(tr.persistence, tr.attrs, im.spec.persistence, theta.persistence, acc_p);
    partial[i] = dot(theta.formation, tr.formation.g_obs.data()) - acc_f.log_norm() +
                 dot(theta.persistence, tr.persistence.g_obs.data()) - acc_p.log_norm();
  });
  double total = 0;
  for (double v : partial) total += v;  // fixed (game, time) order
  return total;
}

double PanelEvaluator::loglik_grad(const ThetaVector& theta, std::vector<double>& grad) const {
  const Impl& im = *impl_;
  check_theta(theta.formation, im.spec.formation, "formation");
  check_theta(theta.persistence, im.spec.persistence, "persistence");
  const std::size_t df = im.spec.formation.size();
  const std::size_t dp = im.spec.persistence.size();

  struct Partial {
    double ll = 0;
    std::vector<double> mean;  // df then dp
  };
  std::vector<Partial> partial(im.transitions.size());
  parallel_for(im.transitions.size(), im.opts.threads, [&](std::size_t i) {
    const auto& tr = im.transitions[i];
    Partial& out = partial[i];
    out.mean.resize(df + dp);
    MomentAccumulator acc_f(df, 1), acc_p(dp, 1);
    im.accumulate(tr.formation, tr.attrs, im.spec.formation, theta.formation, acc_f);
    im.accumulate(tr.persistence, tr.attrs, im.spec.persistence, theta.persistence, acc_p);
    out.ll = dot(theta.formation, tr.formation.g_obs.data()) - acc_f.log_norm() +
             dot(theta.persistence, tr.persistence.g_obs.data()) - acc_p.log_norm();
    acc_f.mean_into(out.mean.data());
    acc_p.mean_into(out.mean.data() + df);
  });

  grad.assign(df + dp, 0.0);
  double total = 0;
  for (std::size_t i = 0; i < im.transitions.size(); ++i) {
    const auto& tr = im.transitions[i];
    total += partial[i].ll;
    for (std::size_t a = 0; a < df; ++a) grad[a] += tr.formation.g_obs[a] - partial[i].mean[a];
    for (std::size_t a = 0; a < dp; ++a)
      grad[df + a] += tr.persistence.g_obs[a] - partial[i].mean[df + a];
  }
  return total;
}

LogLikReport PanelEvaluator::report(const ThetaVector& theta) const {
  const Impl& im = *impl_;
  check_theta(theta.formation, im.spec.formation, "formation");
  check_theta(theta.persistence, im.spec.persistence, "persistence");
  const std::size_t df = im.spec.formation.size();
  const std::size_t dp = im.spec.persistence.size();
  const std::size_t d = df + dp;

  struct Partial {
    double ll = 0;
    std::vector<double> mean;    // d
    std::vector<double> cov_f;   // packed df triangle
    std::vector<double> cov_p;   // packed dp triangle
  };
  std::vector<Partial> partial(im.transitions.size());

  parallel_for(im.transitions.size(), im.opts.threads, [&](std::size_t i) {
    const auto& tr = im.transitions[i];
    Partial& out = partial[i];
    out.mean.resize(d);
    out.cov_f.resize(df * (df + 1) / 2);
    out.cov_p.resize(dp * (dp + 1) / 2);
    MomentAccumulator acc_f(df, 2), acc_p(dp, 2);
    im.accumulate(tr.formation, tr.attrs, im.spec.formation, theta.formation, acc_f);
    im.accumulate(tr.persistence, tr.attrs, im.spec.persistence, theta.persistence, acc_p);
    out.ll = dot(theta.formation, tr.formation.g_obs.data()) - acc_f.log_norm() +
             dot(theta.persistence, tr.persistence.g_obs.data()) - acc_p.log_norm();
    acc_f.mean_into(out.mean.data());
    acc_p.mean_into(out.mean.data() + df);
    acc_f.cov_into(out.cov_f.data());
    acc_p.cov_into(out.cov_p.data());
  });

  LogLikReport report;
  report.gradient.assign(d, 0.0);
  report.fisher_info = Matrix(d, d);
  report.expected_stats.reserve(im.transitions.size());
  for (std::size_t i = 0; i < im.transitions.size(); ++i) {
    const auto& tr = im.transitions[i];
    const Partial& p = partial[i];
    report.loglik += p.ll;
    for (std::size_t a = 0; a < df; ++a) report.gradient[a] += tr.formation.g_obs[a] - p.mean[a];
    for (std::size_t a = 0; a < dp; ++a)
      report.gradient[df + a] += tr.persistence.g_obs[a] - p.mean[df + a];
    std::size_t idx = 0;
    for (std::size_t a = 0; a < df; ++a)
      for (std::size_t b = a; b < df; ++b, ++idx) {
        report.fisher_info(a, b) += p.cov_f[idx];
        if (a != b) report.fisher_info(b, a) += p.cov_f[idx];
      }
    idx = 0;
    for (std::size_t a = 0; a < dp; ++a)
      for (std::size_t b = a; b < dp; ++b, ++idx) {
        report.fisher_info(df + a, df + b) += p.cov_p[idx];
        if (a != b) report.fisher_info(df + b, df + a) += p.cov_p[idx];
      }
    report.expected_stats.push_back(p.mean);
  }
  return report;
}

StatBounds PanelEvaluator::bounds() const {
  const Impl& im = *impl_;
  const std::size_t df = im.spec.formation.size();
  const std::size_t d = df + im.spec.persistence.size();
  StatBounds out;
  out.lower.assign(d, 0.0);
  out.upper.assign(d, 0.0);
  out.observed = im.observed_totals;

  const auto side_extrema = [&](const Impl::Side& side, const AttributeTable& attrs,
                                std::span<const TermSpec> terms, double* lo_out, double* hi_out) {
    const std::size_t ds = terms.size();
    std::vector<double> lo(ds, std::numeric_limits<double>::infinity());
    std::vector<double> hi(ds, -std::numeric_limits<double>::infinity());
    const auto take = [&](const double* g) {
      for (std::size_t a = 0; a < ds; ++a) {
        lo[a] = std::min(lo[a], g[a]);
        hi[a] = std::max(hi[a], g[a]);
      }
    };
    if (!side.table.empty()) {
      const double* row = side.table.data();
      for (std::uint64_t s = 0; s < side.n_states; ++s, row += ds) take(row);
    } else {
      double g[kMaxDyads];
      for (const SmallGraph& y : side.space()) {
        eval_into(terms, y, attrs, g);
        take(g);
      }
    }
    for (std::size_t a = 0; a < ds; ++a) {
      lo_out[a] += lo[a];
      hi_out[a] += hi[a];
    }
  };

  for (const auto& tr : im.transitions) {
    side_extrema(tr.formation, tr.attrs, im.spec.formation, out.lower.data(), out.upper.data());
    side_extrema(tr.persistence, tr.attrs, im.spec.persistence, out.lower.data() + df,
                 out.upper.data() + df);
  }
  return out;
}

LogLikReport panel_loglik(const ThetaVector& theta, const Panel& panel, const ModelSpec& spec,
                          const EvalOptions& opts) {
  return PanelEvaluator(panel, spec, opts).report(theta);
}

StatBounds stat_bounds(const Panel& panel, const ModelSpec& spec, const EvalOptions& opts) {
  return PanelEvaluator(panel, spec, opts).bounds();
}

}  // namespace stergm
