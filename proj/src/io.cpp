#include "stergm/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include <openssl/evp.h>

#include "json.hpp"

namespace stergm {

using nlohmann::json;

namespace {

constexpr const char* kPanelSchema = "stergm-panel/1";
constexpr const char* kFitSchema = "stergm-fit/1";

[[noreturn]] void fail_at(const std::string& path, const std::string& msg) {
  throw std::invalid_argument("panel document error at " + (path.empty() ? "/" : path) + ": " + msg);
}

const json& need(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail_at(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail_at(path, std::string("missing key \"") + key + '"');
  return *it;
}

int need_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail_at(path, "expected an integer");
  return j.get<int>();
}

std::int64_t need_int64(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail_at(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::string need_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail_at(path, "expected a string");
  return j.get<std::string>();
}

const json& need_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail_at(path, "expected an array");
  return j;
}

}  // namespace

Panel parse_panel(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("panel document is not valid JSON: ") + err.what());
  }
  if (need_string(need(doc, "schema_version", ""), "/schema_version") != kPanelSchema)
    fail_at("/schema_version", std::string("expected \"") + kPanelSchema + '"');

  Panel panel;
  const json& games = need_array(need(doc, "games", ""), "/games");
  for (std::size_t gi = 0; gi < games.size(); ++gi) {
    const std::string gpath = "/games/" + std::to_string(gi);
    const json& jg = games[gi];
    GameRecord game;
    game.id = need_string(need(jg, "game_id", gpath), gpath + "/game_id");
    const int n = need_int(need(jg, "n", gpath), gpath + "/n");
    if (n < 2 || n > kMaxNodes)
      fail_at(gpath + "/n", "node count must be between 2 and " + std::to_string(kMaxNodes));

    const json& times = need_array(need(jg, "times", gpath), gpath + "/times");
    if (times.size() < 2) fail_at(gpath + "/times", "a game needs at least two snapshots");
    bool have_prev_t = false;
    int prev_t = 0;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const std::string tpath = gpath + "/times/" + std::to_string(ti);
      const json& jt = times[ti];
      Snapshot snap{0, SmallGraph::empty(n), {}};
      snap.t = need_int(need(jt, "t", tpath), tpath + "/t");
      if (have_prev_t && snap.t <= prev_t) fail_at(tpath + "/t", "times must be strictly increasing");
      prev_t = snap.t;
      have_prev_t = true;

      const json& edges = need_array(need(jt, "edges", tpath), tpath + "/edges");
      std::uint64_t mask = 0;
      for (std::size_t ei = 0; ei < edges.size(); ++ei) {
        const std::string epath = tpath + "/edges/" + std::to_string(ei);
        const json& je = need_array(edges[ei], epath);
        if (je.size() != 2) fail_at(epath, "an edge is a pair [i, j]");
        const int i = need_int(je[0], epath + "/0");
        const int j = need_int(je[1], epath + "/1");
        if (i < 0 || j < 0 || i >= j || j >= n)
          fail_at(epath, "edge endpoints must satisfy 0 <= i < j < n");
        const std::uint64_t bit = std::uint64_t{1} << dyad_index(i, j, n).k;
        if (mask & bit) fail_at(epath, "duplicate edge");
        mask |= bit;
      }
      snap.graph = SmallGraph(n, mask);

      const json& attrs = need(jt, "attrs", tpath);
      const std::string apath = tpath + "/attrs";
      const json& dec = need_array(need(attrs, "decision", apath), apath + "/decision");
      if (dec.size() != static_cast<std::size_t>(n))
        fail_at(apath + "/decision", "expected one entry per node");
      for (std::size_t i = 0; i < dec.size(); ++i) {
        const std::string dpath = apath + "/decision/" + std::to_string(i);
        const std::string code = need_string(dec[i], dpath);
        if (code.size() != 1) fail_at(dpath, "expected \"C\", \"D\" or \"N\"");
        try {
          snap.attrs.decision.push_back(decision_from_code(code[0]));
        } catch (const std::invalid_argument&) {
          fail_at(dpath, "expected \"C\", \"D\" or \"N\"");
        }
      }
      const json& wealth = need_array(need(attrs, "wealth", apath), apath + "/wealth");
      if (wealth.size() != static_cast<std::size_t>(n))
        fail_at(apath + "/wealth", "expected one entry per node");
      for (std::size_t i = 0; i < wealth.size(); ++i)
        snap.attrs.wealth.push_back(need_int64(wealth[i], apath + "/wealth/" + std::to_string(i)));

      game.snapshots.push_back(std::move(snap));
    }
    panel.games.push_back(std::move(game));
  }
  panel.validate();
  return panel;
}

namespace {

json panel_json(const Panel& panel) {
  panel.validate();
  json games = json::array();
  for (const GameRecord& game : panel.games) {
    json times = json::array();
    for (const Snapshot& snap : game.snapshots) {
      json edges = json::array();
      std::uint64_t rest = snap.graph.mask();
      while (rest) {
        const int k = std::countr_zero(rest);
        rest &= rest - 1;
        const DyadIndex d = dyad_at(k, snap.graph.n());
        edges.push_back(json::array({d.i, d.j}));
      }
      json decisions = json::array();
      for (const Decision d : snap.attrs.decision) decisions.push_back(std::string(1, decision_code(d)));
      times.push_back(json{{"t", snap.t},
                           {"edges", std::move(edges)},
                           {"attrs", json{{"decision", std::move(decisions)}, {"wealth", snap.attrs.wealth}}}});
    }
    games.push_back(json{{"game_id", game.id}, {"n", game.n()}, {"times", std::move(times)}});
  }
  return json{{"schema_version", kPanelSchema}, {"games", std::move(games)}};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 computation failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

}  // namespace

std::string panel_to_json(const Panel& panel, bool pretty) {
  const json j = panel_json(panel);
  return pretty ? j.dump(2) : j.dump();
}

std::string panel_digest(const Panel& panel) {
  return "sha256:" + sha256_hex(panel_json(panel).dump());
}

// ---------------------------------------------------------------------------
// Term mini-language

namespace {

class TermParser {
 public:
  explicit TermParser(const std::string& text) : s_(text) {}

  std::vector<TermSpec> parse() {
    std::vector<TermSpec> out;
    skip_ws();
    if (pos_ == s_.size()) return out;
    out.push_back(term());
    skip_ws();
    while (pos_ < s_.size()) {
      expect(',');
      out.push_back(term());
      skip_ws();
    }
    return out;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& msg) const {
    throw std::invalid_argument("term syntax error at byte " + std::to_string(at) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c)
      fail(pos_, std::string("expected '") + c + '\'');
    ++pos_;
  }

  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) fail(start, "expected an identifier");
    return s_.substr(start, pos_ - start);
  }

  double real() {
    skip_ws();
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail(pos_, "expected a number");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  TermSpec term() {
    skip_ws();
    const std::size_t start = pos_;
    const std::string name = ident();
    if (name == "edges") return TermSpec::edges();
    if (name == "triangles") return TermSpec::triangles();
    if (name == "nodematch") {
      expect('(');
      const std::size_t apos = pos_;
      const std::string attr = ident();
      if (attr != "decision") fail(apos, "no categorical attribute named \"" + attr + '"');
      expect(',');
      skip_ws();
      const std::size_t vpos = pos_;
      const std::string value = ident();
      if (value != "C" && value != "D" && value != "N")
        fail(vpos, "decision value must be C, D or N");
      expect(')');
      return TermSpec::node_match(attr, decision_from_code(value[0]));
    }
    if (name == "absdiff") {
      expect('(');
      const std::size_t apos = pos_;
      const std::string attr = ident();
      if (attr != "wealth") fail(apos, "no numeric attribute named \"" + attr + '"');
      double scale = 0.001;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        const std::size_t kpos = pos_;
        if (ident() != "scale") fail(kpos, "expected \"scale=\"");
        expect('=');
        const std::size_t spos = pos_;
        scale = real();
        if (!(scale > 0)) fail(spos, "scale must be positive");
      }
      expect(')');
      return TermSpec::abs_diff(attr, scale);
    }
    fail(start, "unknown term name \"" + name + '"');
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<TermSpec> parse_terms(const std::string& text) { return TermParser(text).parse(); }

// ---------------------------------------------------------------------------
// Fit documents

namespace {

const char* existence_name(Existence e) {
  switch (e) {
    case Existence::ok: return "ok";
    case Existence::at_lower_boundary: return "at_lower_boundary";
    case Existence::at_upper_boundary: return "at_upper_boundary";
  }
  throw std::logic_error("corrupt existence flag");
}

Existence existence_from_name(const std::string& name) {
  if (name == "ok") return Existence::ok;
  if (name == "at_lower_boundary") return Existence::at_lower_boundary;
  if (name == "at_upper_boundary") return Existence::at_upper_boundary;
  throw std::invalid_argument("fit document error: unknown existence flag \"" + name + '"');
}

json fit_json_obj(const FitResult& fit) {
  json j;
  j["schema_version"] = kFitSchema;
  j["model"] = {{"formation", render_terms(fit.spec.formation)},
                {"persistence", render_terms(fit.spec.persistence)}};
  j["coefficients"] = {{"formation", fit.theta_hat.formation},
                       {"persistence", fit.theta_hat.persistence}};
  j["se"] = fit.se;
  json cov = json::array();
  for (std::size_t r = 0; r < fit.cov.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < fit.cov.cols; ++c) row.push_back(fit.cov(r, c));
    cov.push_back(std::move(row));
  }
  j["cov"] = std::move(cov);
  j["loglik"] = fit.loglik;
  j["residual_deviance"] = fit.residual_deviance;
  j["n_params"] = fit.n_params;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["grad_norm"] = fit.grad_norm;
  json flags = json::array();
  for (const Existence e : fit.existence) flags.push_back(existence_name(e));
  j["existence"] = std::move(flags);
  j["singular_information"] = fit.singular_information;
  json wald = json::array();
  for (const WaldRow& row : wald_tests(fit))
    wald.push_back(json{{"index", row.index},
                        {"side", row.side},
                        {"term", row.term},
                        {"estimate", row.estimate},
                        {"se", row.se},
                        {"z", row.z},
                        {"p", row.p},
                        {"stars", row.stars}});
  j["wald"] = std::move(wald);
  if (fit.panel_digest) j["data_digest"] = *fit.panel_digest;
  return j;
}

double number_or(const json& j, double fallback) {
  return j.is_number() ? j.get<double>() : fallback;
}

}  // namespace

std::string fit_to_json(const FitResult& fit, const std::vector<PerTimeFit>* per_time, bool pretty) {
  json j = fit_json_obj(fit);
  if (per_time != nullptr) {
    json slices = json::array();
    for (const PerTimeFit& slice : *per_time) {
      json js{{"t", slice.t}};
      if (slice.fit)
        js["fit"] = fit_json_obj(*slice.fit);
      else
        js["error"] = slice.error;
      slices.push_back(std::move(js));
    }
    j["per_time"] = std::move(slices);
  }
  return pretty ? j.dump(2) : j.dump();
}

FitResult parse_fit_document(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("fit document is not valid JSON: ") + err.what());
  }
  const auto get = [&](const char* key) -> const json& {
    const auto it = j.find(key);
    if (it == j.end())
      throw std::invalid_argument(std::string("fit document error: missing key \"") + key + '"');
    return *it;
  };
  if (!get("schema_version").is_string() || get("schema_version") != kFitSchema)
    throw std::invalid_argument(std::string("fit document error: expected schema \"") + kFitSchema + '"');

  FitResult fit;
  fit.spec.formation = parse_terms(get("model").at("formation").get<std::string>());
  fit.spec.persistence = parse_terms(get("model").at("persistence").get<std::string>());
  fit.n_params = fit.spec.param_count();

  for (const json& f : get("existence")) fit.existence.push_back(existence_from_name(f.get<std::string>()));
  if (fit.existence.size() != fit.n_params)
    throw std::invalid_argument("fit document error: existence flags do not match the model size");

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  constexpr double inf = std::numeric_limits<double>::infinity();
  const json& coef = get("coefficients");
  std::size_t k = 0;
  const auto read_side = [&](const json& arr, std::vector<double>& out, std::size_t want) {
    if (!arr.is_array() || arr.size() != want)
      throw std::invalid_argument("fit document error: coefficient arrays do not match the model");
    for (const json& v : arr) {
      double x = number_or(v, nan);
      // Boundary estimates serialize as null; the flag carries the sign back.
      if (v.is_null() && fit.existence[k] == Existence::at_lower_boundary) x = -inf;
      if (v.is_null() && fit.existence[k] == Existence::at_upper_boundary) x = inf;
      out.push_back(x);
      ++k;
    }
  };
  read_side(coef.at("formation"), fit.theta_hat.formation, fit.spec.formation.size());
  read_side(coef.at("persistence"), fit.theta_hat.persistence, fit.spec.persistence.size());

  for (const json& v : get("se")) fit.se.push_back(number_or(v, nan));
  if (fit.se.size() != fit.n_params)
    throw std::invalid_argument("fit document error: standard-error array does not match the model");

  const json& cov = get("cov");
  if (!cov.is_array() || cov.size() != fit.n_params)
    throw std::invalid_argument("fit document error: covariance shape does not match the model");
  fit.cov = Matrix(fit.n_params, fit.n_params);
  for (std::size_t r = 0; r < fit.n_params; ++r) {
    if (!cov[r].is_array() || cov[r].size() != fit.n_params)
      throw std::invalid_argument("fit document error: covariance shape does not match the model");
    for (std::size_t c = 0; c < fit.n_params; ++c) fit.cov(r, c) = number_or(cov[r][c], nan);
  }

  fit.loglik = get("loglik").get<double>();
  fit.residual_deviance = get("residual_deviance").get<double>();
  fit.converged = get("converged").get<bool>();
  fit.iterations = get("iterations").get<int>();
  fit.grad_norm = number_or(get("grad_norm"), nan);
  fit.singular_information = get("singular_information").get<bool>();
  if (j.contains("data_digest")) fit.panel_digest = j["data_digest"].get<std::string>();
  return fit;
}

ThetaVector parse_theta_file(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("coefficient file is not valid JSON: ") + err.what());
  }
  const auto side = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array())
      throw std::invalid_argument(std::string("coefficient file error: missing array \"") + key + '"');
    std::vector<double> out;
    for (const json& v : j[key]) {
      if (!v.is_number())
        throw std::invalid_argument(std::string("coefficient file error: \"") + key +
                                    "\" must contain numbers");
      out.push_back(v.get<double>());
    }
    return out;
  };
  return ThetaVector{side("formation"), side("persistence")};
}

std::string theta_to_json(const ThetaVector& theta) {
  return json{{"formation", theta.formation}, {"persistence", theta.persistence}}.dump(2);
}

AttributeSource parse_attr_source(const std::string& text) {
  const std::size_t colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "bernoulli") {
    char* end = nullptr;
    const double p = std::strtod(arg.c_str(), &end);
    if (arg.empty() || end != arg.c_str() + arg.size())
      throw std::invalid_argument("attribute source error: expected bernoulli:<probability>");
    return AttributeSource::bernoulli(p);
  }
  if (kind == "constant") {
    if (arg.size() != 1)
      throw std::invalid_argument("attribute source error: expected constant:<C|D|N>");
    return AttributeSource::constant(decision_from_code(arg[0]));
  }
  if (kind == "replay")
    throw std::invalid_argument(
        "attribute source error: replay needs decision trajectories (replay:<panel.json>)");
  throw std::invalid_argument("attribute source error: unknown source \"" + kind + '"');
}

}  // namespace stergm
