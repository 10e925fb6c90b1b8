#pragma once

#include <span>
#include <string>
#include <vector>

#include "stergm/graph.hpp"
#include "stergm/panel.hpp"

namespace stergm {

enum class TermKind { edges, triangles, node_match, abs_diff };

// One sufficient-statistic term.  The attribute name is resolved against the
// AttributeTable at evaluation time ("decision" is categorical, "wealth"
// numeric); unknown names or wrong domains are rejected there.
struct TermSpec {
  TermKind kind = TermKind::edges;
  std::string attribute;                 // node_match / abs_diff only
  Decision value = Decision::none;       // node_match only
  double scale = 1.0;                    // abs_diff only, must be > 0

  static TermSpec edges() { return TermSpec{TermKind::edges, "", Decision::none, 1.0}; }
  static TermSpec triangles() { return TermSpec{TermKind::triangles, "", Decision::none, 1.0}; }
  static TermSpec node_match(std::string attribute, Decision value) {
    return TermSpec{TermKind::node_match, std::move(attribute), value, 1.0};
  }
  static TermSpec abs_diff(std::string attribute, double scale = 0.001);

  friend bool operator==(const TermSpec&, const TermSpec&) = default;
};

// Canonical surface syntax of a term, e.g. "nodematch(decision,C)" or
// "absdiff(wealth,scale=0.001)".  parse_terms(render_terms(x)) == x.
std::string render_term(const TermSpec& term);
std::string render_terms(std::span<const TermSpec> terms);

// Ordered formation and persistence term lists; term order fixes the
// parameter order (formation block first, then persistence).
struct ModelSpec {
  std::vector<TermSpec> formation;
  std::vector<TermSpec> persistence;

  std::size_t param_count() const { return formation.size() + persistence.size(); }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

using StatVector = std::vector<double>;

double eval_term(const TermSpec& term, const SmallGraph& y, const AttributeTable& attrs);

// Componentwise eval_term in term order; writes terms.size() values to out.
void eval_into(std::span<const TermSpec> terms, const SmallGraph& y, const AttributeTable& attrs,
               double* out);
StatVector eval_vector(std::span<const TermSpec> terms, const SmallGraph& y, const AttributeTable& attrs);

// eval_term(y with d set) - eval_term(y with d cleared), computed without
// the two evaluations.  Exact (all increments are exactly representable).
double change_statistic(const TermSpec& term, const SmallGraph& y, const DyadIndex& d,
                        const AttributeTable& attrs);

// True iff the term's change statistic never depends on other dyads' states.
bool is_dyadic_independent(const TermSpec& term);
bool is_dyadic_independent(std::span<const TermSpec> terms);

}  // namespace stergm
