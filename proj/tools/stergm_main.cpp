#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "stergm/io.hpp"

namespace {

using namespace stergm;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open \"" + path + '"');
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write \"" + out_path + '"');
  out << text << '\n';
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("STERGM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;  // all cores
}

void print_fit_table(const FitResult& fit, std::FILE* out) {
  const auto est = fit.theta_hat.stacked();
  const auto row_term = [&](std::size_t k) {
    return k < fit.spec.formation.size() ? render_term(fit.spec.formation[k])
                                         : render_term(fit.spec.persistence[k - fit.spec.formation.size()]);
  };
  const auto print_side = [&](const char* label, std::size_t begin, std::size_t end) {
    std::fprintf(out, "%s\n", label);
    if (begin == end) std::fprintf(out, "  (no terms)\n");
    for (std::size_t k = begin; k < end; ++k) {
      std::fprintf(out, "  %-28s", row_term(k).c_str());
      if (fit.existence[k] == Existence::at_lower_boundary) {
        std::fprintf(out, "diverges to -infinity (observed statistic at its minimum)\n");
      } else if (fit.existence[k] == Existence::at_upper_boundary) {
        std::fprintf(out, "diverges to +infinity (observed statistic at its maximum)\n");
      } else if (!std::isfinite(fit.se[k])) {
        std::fprintf(out, "%10.3f  (SE unavailable: singular information)\n", est[k]);
      } else {
        const double z = est[k] / fit.se[k];
        const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
        const char* stars = p < 0.001 ? "***" : p < 0.01 ? "**" : p < 0.05 ? "*" : "";
        std::fprintf(out, "%10.3f (%.3f)%-3s  z = %7.2f  p = %.3g\n", est[k], fit.se[k], stars, z, p);
      }
    }
  };
  print_side("Formation:", 0, fit.spec.formation.size());
  print_side("Persistence:", fit.spec.formation.size(), fit.n_params);
  std::fprintf(out, "Log-likelihood %.6f   Residual deviance %.2f   (%s, %d iterations)\n",
               fit.loglik, fit.residual_deviance, fit.converged ? "converged" : "NOT converged",
               fit.iterations);
  std::fprintf(out, "Significance: 0.05*, 0.01**, 0.001***\n");
}

struct FitArgs {
  std::string data, formation, persistence, out;
  bool by_time = false;
  double tol = 1e-8;
  int max_iters = 500;
  int threads = 0;
};

int run_fit(const FitArgs& args) {
  const Panel panel = parse_panel(read_file(args.data));
  const ModelSpec spec{parse_terms(args.formation), parse_terms(args.persistence)};
  FitConfig config;
  config.grad_tol = args.tol;
  config.max_iters = args.max_iters;
  config.eval.threads = resolve_threads(args.threads);

  FitResult fit = maximize(panel, spec, config);
  fit.panel_digest = panel_digest(panel);
  std::vector<PerTimeFit> slices;
  if (args.by_time) slices = fit_per_time(panel, spec, config);

  print_fit_table(fit, stderr);
  write_output(fit_to_json(fit, args.by_time ? &slices : nullptr), args.out);
  return fit.any_boundary() ? 2 : 0;
}

int run_lrtest(const std::string& reduced_path, const std::string& full_path) {
  const FitResult reduced = parse_fit_document(read_file(reduced_path));
  const FitResult full = parse_fit_document(read_file(full_path));
  if (full.n_params <= reduced.n_params)
    throw std::invalid_argument("the second model must strictly extend the first");
  const LrTestResult r = lr_test(reduced, full);
  std::fprintf(stderr, "Deviance %.2f on %u df, p = %.3f\n", r.deviance, r.df, r.p_value);
  std::printf("%.2f (%u), %.3f\n", r.deviance, r.df, r.p_value);
  return 0;
}

struct SimArgs {
  int n = 6;
  int games = 1;
  int transitions = 7;
  int initial_ties = 5;
  std::string theta_file, formation, persistence, attr_source = "bernoulli:0.5", out;
  std::uint64_t seed = 0;
};

int run_simulate(const SimArgs& args) {
  SimConfig config;
  config.n = args.n;
  config.games = args.games;
  config.transitions = args.transitions;
  config.initial_ties = args.initial_ties;
  config.seed = args.seed;
  config.spec = ModelSpec{parse_terms(args.formation), parse_terms(args.persistence)};
  config.theta = args.theta_file.empty() ? ThetaVector::zeros(config.spec)
                                         : parse_theta_file(read_file(args.theta_file));

  if (args.attr_source.rfind("replay:", 0) == 0) {
    const Panel source = parse_panel(read_file(args.attr_source.substr(7)));
    std::vector<std::vector<std::vector<Decision>>> trajectories;
    for (const GameRecord& game : source.games) {
      std::vector<std::vector<Decision>> rounds;
      for (std::size_t s = 1; s < game.snapshots.size(); ++s)
        rounds.push_back(game.snapshots[s].attrs.decision);
      trajectories.push_back(std::move(rounds));
    }
    config.attribute_source = AttributeSource::replay(std::move(trajectories));
  } else {
    config.attribute_source = parse_attr_source(args.attr_source);
  }

  const Panel panel = simulate_panel(config);
  write_output(panel_to_json(panel), args.out);
  return 0;
}

// RFC 4180 quoting for fields that embed commas or quotes (term names do).
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

int run_stats(const std::string& data, const std::string& formation, const std::string& persistence,
              const std::string& out_path) {
  const Panel panel = parse_panel(read_file(data));
  const ModelSpec spec{parse_terms(formation), parse_terms(persistence)};
  std::ostringstream csv;
  csv << "game,t,side,term,value\n";
  char buf[40];
  panel.for_each_transition([&](std::size_t game_idx, int t, const TransitionView& tv) {
    const std::string& id = panel.games[game_idx].id;
    const auto emit = [&](const char* side, const std::vector<TermSpec>& terms, const SmallGraph& y) {
      const StatVector values = eval_vector(terms, y, tv.attrs);
      for (std::size_t a = 0; a < terms.size(); ++a) {
        std::snprintf(buf, sizeof buf, "%.17g", values[a]);
        csv << csv_field(id) << ',' << t << ',' << side << ',' << csv_field(render_term(terms[a]))
            << ',' << buf << '\n';
      }
    };
    emit("formation", spec.formation, tv.y_plus);
    emit("persistence", spec.persistence, tv.y_minus);
  });
  std::string text = csv.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  write_output(text, out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact maximum-likelihood inference for separable temporal ERGMs on small dynamic networks"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a model to a panel by exact maximum likelihood");
  fit_cmd->add_option("--data", fit_args.data, "Panel JSON file (stergm-panel/1)")->required();
  fit_cmd->add_option("--formation", fit_args.formation, "Formation-side terms (empty for none)");
  fit_cmd->add_option("--persistence", fit_args.persistence, "Persistence-side terms (empty for none)");
  fit_cmd->add_flag("--by-time", fit_args.by_time, "Also refit each transition time separately");
  fit_cmd->add_option("--tol", fit_args.tol, "Gradient infinity-norm convergence threshold");
  fit_cmd->add_option("--max-iters", fit_args.max_iters, "Iteration limit");
  fit_cmd->add_option("--out", fit_args.out, "Write the fit document here instead of stdout");
  fit_cmd->add_option("--threads", fit_args.threads,
                      "Worker threads (default: STERGM_THREADS or all cores)");

  std::string lr_reduced, lr_full;
  CLI::App* lr_cmd = app.add_subcommand("lrtest", "Likelihood-ratio test of two nested fits");
  lr_cmd->add_option("reduced", lr_reduced, "Fit document of the smaller model")->required();
  lr_cmd->add_option("full", lr_full, "Fit document of the larger model")->required();

  SimArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Draw a synthetic panel from a model");
  sim_cmd->add_option("--n", sim_args.n, "Nodes per game");
  sim_cmd->add_option("--games", sim_args.games, "Number of games");
  sim_cmd->add_option("--transitions", sim_args.transitions, "Rounds per game");
  sim_cmd->add_option("--initial-ties", sim_args.initial_ties, "Edges in the starting graph");
  sim_cmd->add_option("--theta-file", sim_args.theta_file, "Coefficient JSON file (default: zeros)");
  sim_cmd->add_option("--formation", sim_args.formation, "Formation-side terms");
  sim_cmd->add_option("--persistence", sim_args.persistence, "Persistence-side terms");
  sim_cmd->add_option("--seed", sim_args.seed, "RNG seed");
  sim_cmd->add_option("--attr-source", sim_args.attr_source,
                      "bernoulli:<p>, constant:<C|D|N> or replay:<panel.json>");
  sim_cmd->add_option("--out", sim_args.out, "Write the panel here instead of stdout");

  std::string stats_data, stats_formation, stats_persistence, stats_out;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Observed per-transition statistics as CSV");
  stats_cmd->add_option("--data", stats_data, "Panel JSON file")->required();
  stats_cmd->add_option("--formation", stats_formation, "Formation-side terms");
  stats_cmd->add_option("--persistence", stats_persistence, "Persistence-side terms");
  stats_cmd->add_option("--out", stats_out, "Write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*fit_cmd) return run_fit(fit_args);
    if (*lr_cmd) return run_lrtest(lr_reduced, lr_full);
    if (*sim_cmd) return run_simulate(sim_args);
    if (*stats_cmd) return run_stats(stats_data, stats_formation, stats_persistence, stats_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
