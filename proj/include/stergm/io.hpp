#pragma once

#include <string>
#include <vector>

#include "stergm/inference.hpp"
#include "stergm/simulate.hpp"

namespace stergm {

// Parses a stergm-panel/1 JSON document.  Violations raise invalid_argument
// with a JSON-pointer-style location, e.g. "/games/0/times/2/edges/1".
Panel parse_panel(const std::string& text);

// Serializes to the stergm-panel/1 schema.  The compact form (pretty = false)
// with sorted keys and ascending edge lists is the canonical byte stream the
// digest is computed over; parse_panel(panel_to_json(p)) reproduces p.
std::string panel_to_json(const Panel& panel, bool pretty = true);

// "sha256:<hex>" over the canonical serialization; embedded in fit documents
// so deviance comparisons across different data can be refused.
std::string panel_digest(const Panel& panel);

// Term mini-language:
//   term_list := term ("," term)*
//   term      := "edges" | "triangles"
//              | "nodematch(" ident "," value ")"
//              | "absdiff(" ident ("," "scale=" real)? ")"
// Empty input means the empty term list.  Errors carry byte offsets.
std::vector<TermSpec> parse_terms(const std::string& text);

// Serializes a stergm-fit/1 document; per_time, when given, adds the per-time
// refit section.  parse_fit_document inverts it (boundary coefficients are
// stored as nulls and restored to +/-infinity from the existence flags).
std::string fit_to_json(const FitResult& fit, const std::vector<PerTimeFit>* per_time = nullptr,
                        bool pretty = true);
FitResult parse_fit_document(const std::string& text);

// Coefficients for simulation: {"formation": [...], "persistence": [...]}.
ThetaVector parse_theta_file(const std::string& text);
std::string theta_to_json(const ThetaVector& theta);

// "bernoulli:<p>" or "constant:<C|D|N>".  (Replay sources need trajectories
// and are assembled by the caller from a panel.)
AttributeSource parse_attr_source(const std::string& text);

}  // namespace stergm
