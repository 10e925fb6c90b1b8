#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stergm/io.hpp"

namespace py = pybind11;

namespace {

using namespace stergm;

std::string fit_json(const std::string& panel_json, const std::string& formation,
                     const std::string& persistence, double tol, int max_iters, int threads,
                     bool by_time) {
  const Panel panel = parse_panel(panel_json);
  const ModelSpec spec{parse_terms(formation), parse_terms(persistence)};
  FitConfig config;
  config.grad_tol = tol;
  config.max_iters = max_iters;
  config.eval.threads = threads;
  FitResult fit = maximize(panel, spec, config);
  fit.panel_digest = panel_digest(panel);
  if (!by_time) return fit_to_json(fit, nullptr, false);
  const std::vector<PerTimeFit> slices = fit_per_time(panel, spec, config);
  return fit_to_json(fit, &slices, false);
}

std::string simulate_json(int n, int games, int transitions, int initial_ties, std::uint64_t seed,
                          const std::string& formation, const std::string& persistence,
                          std::vector<double> theta_formation, std::vector<double> theta_persistence,
                          const std::string& attr_source) {
  SimConfig config;
  config.n = n;
  config.games = games;
  config.transitions = transitions;
  config.initial_ties = initial_ties;
  config.seed = seed;
  config.spec = ModelSpec{parse_terms(formation), parse_terms(persistence)};
  config.theta = ThetaVector{std::move(theta_formation), std::move(theta_persistence)};
  if (config.theta.size() == 0 && config.spec.param_count() > 0)
    config.theta = ThetaVector::zeros(config.spec);
  config.attribute_source = parse_attr_source(attr_source);
  return panel_to_json(simulate_panel(config), false);
}

double loglik_value(const std::string& panel_json, const std::string& formation,
                    const std::string& persistence, std::vector<double> theta_formation,
                    std::vector<double> theta_persistence, int threads) {
  const Panel panel = parse_panel(panel_json);
  const ModelSpec spec{parse_terms(formation), parse_terms(persistence)};
  EvalOptions opts;
  opts.threads = threads;
  return PanelEvaluator(panel, spec, opts)
      .loglik(ThetaVector{std::move(theta_formation), std::move(theta_persistence)});
}

py::dict lrtest_dict(const std::string& reduced_json, const std::string& full_json) {
  const LrTestResult r = lr_test(parse_fit_document(reduced_json), parse_fit_document(full_json));
  py::dict out;
  out["deviance"] = r.deviance;
  out["df"] = r.df;
  out["p_value"] = r.p_value;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact likelihood inference for separable temporal ERGMs on small dynamic networks";
  m.attr("__version__") = "0.1.0";

  m.def("fit", &fit_json, py::arg("panel_json"), py::arg("formation") = "",
        py::arg("persistence") = "", py::arg("tol") = 1e-8, py::arg("max_iters") = 500,
        py::arg("threads") = 0, py::arg("by_time") = false,
        "Exact MLE fit; returns a stergm-fit/1 JSON document.");

  m.def("simulate", &simulate_json, py::arg("n") = 6, py::arg("games") = 1,
        py::arg("transitions") = 7, py::arg("initial_ties") = 5, py::arg("seed") = 0,
        py::arg("formation") = "", py::arg("persistence") = "",
        py::arg("theta_formation") = std::vector<double>{},
        py::arg("theta_persistence") = std::vector<double>{},
        py::arg("attr_source") = "bernoulli:0.5",
        "Draw a synthetic panel; returns a stergm-panel/1 JSON document.");

  m.def("loglik", &loglik_value, py::arg("panel_json"), py::arg("formation"),
        py::arg("persistence"), py::arg("theta_formation"), py::arg("theta_persistence"),
        py::arg("threads") = 0, "Exact panel log-likelihood at the given coefficients.");

  m.def("lr_test", &lrtest_dict, py::arg("reduced_fit_json"), py::arg("full_fit_json"),
        "Deviance test of two nested fit documents.");

  m.def("panel_digest",
        [](const std::string& panel_json) { return panel_digest(parse_panel(panel_json)); },
        py::arg("panel_json"), "Canonical sha256 digest of a panel document.");

  m.def("stat_totals",
        [](const std::string& panel_json, const std::string& formation,
           const std::string& persistence) {
          const Panel panel = parse_panel(panel_json);
          const ModelSpec spec{parse_terms(formation), parse_terms(persistence)};
          return PanelEvaluator(panel, spec).observed_totals();
        },
        py::arg("panel_json"), py::arg("formation"), py::arg("persistence"),
        "Summed observed statistics, formation side then persistence side.");
}
