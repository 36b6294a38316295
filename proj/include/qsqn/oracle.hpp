#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "qsqn/program.hpp"

// Reference semantics used by tests and `oracle-check`. Nothing here calls the
// unifier or matcher of term.hpp; only the term store is shared.

namespace qsqn {

struct SldOptions {
  unsigned depth_bound = 0;           // prune goals and goal instances deeper than this
  std::uint64_t step_budget = 100000; // resolution attempts over all rounds
  std::size_t max_length = 4096;      // longest derivation tried; bounds the recursion
};

struct SldResult {
  std::vector<Tuple> answers;  // instances of the goal's arguments, one per variant class
  bool truncated = false;      // the step budget cut the search
  std::uint64_t steps = 0;
};

/// SLD-resolution with leftmost selection. EDB facts act as bodyless clauses.
/// Derivation length is deepened iteratively (8, 16, 32, ...) so every
/// branch gets explored fairly.
SldResult sld_answers(KnowledgeBase& kb, const Atom& goal, const SldOptions& opts);

/// Ground atoms by predicate.
using Model = std::map<PredId, std::set<Tuple>>;

/// Least model of a function-free program with ground facts. Variables of a
/// clause head not bound by its body range over the constants of the
/// program, the EDB and `extra`. Throws std::invalid_argument on function
/// symbols or non-ground facts.
Model tp_fixpoint(const KnowledgeBase& kb, std::span<const TermId> extra = {});

/// The constants tp_fixpoint ranges over.
std::vector<TermId> herbrand_constants(const KnowledgeBase& kb, std::span<const TermId> extra = {});

/// Facts of the goal predicate that are instances of the goal.
std::set<Tuple> model_answers(const TermStore& store, const Model& m, const Atom& goal);

/// Every ground instance, over `universe`, of each tuple.
std::set<Tuple> ground_instances(const TermStore& store, const std::vector<Tuple>& tuples,
                                 std::span<const TermId> universe);

/// One-sided matching written independently of the engine's.
bool oracle_matches(const TermStore& store, std::span<const TermId> general,
                    std::span<const TermId> instance);
bool instance_of_any(const TermStore& store, std::span<const TermId> x,
                     const std::vector<Tuple>& generals);

enum class Verdict { correct, incorrect, inconclusive };

/// Is goal(tuple) a logical consequence? Variables are replaced by fresh
/// constants first (universal closure). With a model the check is membership,
/// otherwise an SLD search for the ground atom.
Verdict verify_answer(KnowledgeBase& kb, const Atom& goal, std::span<const TermId> tuple,
                      const Model* model, const SldOptions& opts);

}  // namespace qsqn
