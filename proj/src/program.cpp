#include "qsqn/program.hpp"

#include <algorithm>
#include <set>

namespace qsqn {

ParseError::ParseError(Kind kind, std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error(line ? std::to_string(line) + ":" + std::to_string(column) + ": " + what
                              : what),
      kind_(kind),
      line_(line),
      column_(column) {}

std::optional<PredId> Program::find(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

PredId Program::declare(std::string_view name, std::size_t arity, PredKind kind,
                        std::size_t line, std::size_t column) {
  if (auto p = find(name)) {
    const Predicate& existing = predicate(*p);
    if (existing.arity != arity)
      throw ParseError(ParseError::Kind::arity_conflict, line, column,
                       "predicate " + std::string(name) + " used with arity " +
                           std::to_string(arity) + " but declared with arity " +
                           std::to_string(existing.arity));
    return *p;
  }
  PredId id{static_cast<std::uint32_t>(preds_.size())};
  preds_.push_back({std::string(name), arity, kind, false});
  by_name_.emplace(std::string(name), id);
  return id;
}

std::vector<std::size_t> Program::clauses_for(PredId p) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < clauses_.size(); ++i)
    if (clauses_[i].head.pred == p) out.push_back(i);
  return out;
}

void EdbInstance::add(const TermStore& store, PredId p, std::size_t arity, Tuple t) {
  auto it = relations_.find(p);
  if (it == relations_.end()) it = relations_.emplace(p, TupleSet(store, arity)).first;
  TupleSet& rel = it->second;
  if (is_ground(store, t) && rel.any_generalizer(t, [&](Slot s) { return std::ranges::equal(rel[s], t); })) return;
  rel.insert(std::move(t));
}

const TupleSet* EdbInstance::relation(PredId p) const {
  auto it = relations_.find(p);
  return it == relations_.end() ? nullptr : &it->second;
}

std::size_t EdbInstance::fact_count() const {
  std::size_t n = 0;
  for (const auto& [p, rel] : relations_) n += rel.size();
  return n;
}

std::vector<PredId> EdbInstance::predicates() const {
  std::vector<PredId> out;
  for (const auto& [p, rel] : relations_) out.push_back(p);
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(const TermStore& store, const Program& program, const Atom& a) {
  std::string out = program.predicate(a.pred).name;
  if (a.args.empty()) return out;
  return out + store.to_string(a.args);
}

std::string to_string(const TermStore& store, const Program& program, const Clause& c) {
  std::string out = to_string(store, program, c.head);
  if (!c.body.empty()) {
    out += " :- ";
    for (std::size_t j = 0; j < c.body.size(); ++j) {
      if (j) out += ", ";
      out += to_string(store, program, c.body[j]);
    }
  }
  return out + ".";
}

std::string to_string(const TermStore& store, const Program& program) {
  std::string out;
  for (const Predicate& p : program.predicates()) {
    if (!p.declared) continue;
    out += p.kind == PredKind::extensional ? "#extensional " : "#intensional ";
    out += p.name + "/" + std::to_string(p.arity) + ".\n";
  }
  for (const Clause& c : program.clauses()) out += to_string(store, program, c) + "\n";
  return out;
}

namespace {

void collect_constants(const TermStore& store, TermId t, std::set<TermId>& out) {
  if (store.is_variable(t)) return;
  if (store.arity(t) == 0) {
    out.insert(t);
    return;
  }
  for (TermId c : store.args(t)) collect_constants(store, c, out);
}

bool has_functions(const TermStore& store, std::span<const TermId> ts) {
  return std::any_of(ts.begin(), ts.end(), [&](TermId t) { return store.depth(t) > 0; });
}

}  // namespace

std::vector<TermId> constant_universe(const TermStore& store, const Program& program,
                                      const EdbInstance& edb) {
  std::set<TermId> out;
  auto add_atom = [&](const Atom& a) {
    for (TermId t : a.args) collect_constants(store, t, out);
  };
  for (const Clause& c : program.clauses()) {
    add_atom(c.head);
    for (const Atom& b : c.body) add_atom(b);
  }
  for (PredId p : edb.predicates())
    edb.relation(p)->for_each([&](Slot, TupleView t) {
      for (TermId x : t) collect_constants(store, x, out);
    });
  return {out.begin(), out.end()};
}

bool has_function_symbols(const TermStore& store, const Program& program,
                          const EdbInstance& edb) {
  for (const Clause& c : program.clauses()) {
    if (has_functions(store, c.head.args)) return true;
    for (const Atom& b : c.body)
      if (has_functions(store, b.args)) return true;
  }
  bool found = false;
  for (PredId p : edb.predicates())
    edb.relation(p)->for_each([&](Slot, TupleView t) { found = found || has_functions(store, t); });
  return found;
}

}  // namespace qsqn
