#pragma once

#include <string_view>
#include <vector>

#include "qsqn/program.hpp"

namespace qsqn {

/// Positive quantifier-free query formula.
struct Formula {
  enum class Kind { atom, conj, disj };
  Kind kind = Kind::atom;
  Atom atom;
  std::vector<Formula> children;
};

struct Query {
  Formula formula;
  Tuple vars;  // first-occurrence order
};

/// Result of normalization: the goal atom handed to the engine, plus the
/// query variables in the order answers are reported.
struct NormalizedQuery {
  Atom goal;
  Tuple vars;
  bool rewritten = false;
};

// Predicates in heads become intensional; the rest extensional unless a
// `#intensional p/n.` directive says otherwise.
void parse_program(KnowledgeBase& kb, std::string_view text);
void parse_edb(KnowledgeBase& kb, std::string_view text);
/// One ground tuple per row; `pred` names the relation.
void load_csv(KnowledgeBase& kb, std::string_view pred, std::string_view text);
/// `?- phi.` with `&` (or `,`) for conjunction and `|` for disjunction.
Query parse_query(KnowledgeBase& kb, std::string_view text);

/// Rewrites a query into a single goal atom, adding `_qN` predicates and
/// clauses to the program when needed.
NormalizedQuery normalize_query(KnowledgeBase& kb, const Query& q);

}  // namespace qsqn
