#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qsqn/term.hpp"
#include "qsqn/tuple_set.hpp"

namespace qsqn {

enum class PredId : std::uint32_t {};
constexpr std::uint32_t index_of(PredId p) { return static_cast<std::uint32_t>(p); }

enum class PredKind : std::uint8_t { extensional, intensional };

struct Predicate {
  std::string name;
  std::size_t arity = 0;
  PredKind kind = PredKind::extensional;
  bool declared = false;  // fixed by a directive
};

struct Atom {
  PredId pred{};
  Tuple args;
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Clause {
  Atom head;
  std::vector<Atom> body;
};

/// Errors raised while reading programs, facts and queries.
class ParseError : public std::runtime_error {
 public:
  enum class Kind { syntax, arity_conflict, extensional_in_head, unknown_predicate };
  ParseError(Kind kind, std::size_t line, std::size_t column, const std::string& what);
  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  Kind kind_;
  std::size_t line_;
  std::size_t column_;
};

/// Positive logic program plus the predicate table shared with the EDB.
/// Clause order is preserved; clause indices are dense and 0-based
/// internally (printed 1-based).
class Program {
 public:
  std::optional<PredId> find(std::string_view name) const;
  /// Registers `name/arity`; throws ParseError(arity_conflict) when `name`
  /// is already known with another arity.
  PredId declare(std::string_view name, std::size_t arity, PredKind kind,
                 std::size_t line = 0, std::size_t column = 0);
  void set_kind(PredId p, PredKind kind) { preds_[index_of(p)].kind = kind; }
  void mark_declared(PredId p) { preds_[index_of(p)].declared = true; }

  const Predicate& predicate(PredId p) const { return preds_[index_of(p)]; }
  const std::vector<Predicate>& predicates() const { return preds_; }
  bool is_intensional(PredId p) const { return predicate(p).kind == PredKind::intensional; }

  const std::vector<Clause>& clauses() const { return clauses_; }
  const Clause& clause(std::size_t i) const { return clauses_[i]; }
  void add_clause(Clause c) { clauses_.push_back(std::move(c)); }
  std::vector<std::size_t> clauses_for(PredId p) const;

 private:
  std::vector<Predicate> preds_;
  std::map<std::string, PredId, std::less<>> by_name_;
  std::vector<Clause> clauses_;
};

/// Generalized EDB instance: each extensional predicate maps to a set of
/// generalized tuples (variables and function symbols allowed).
class EdbInstance {
 public:
  /// Adds a fact; exact duplicates of ground facts are ignored.
  void add(const TermStore& store, PredId p, std::size_t arity, Tuple t);
  const TupleSet* relation(PredId p) const;
  std::size_t fact_count() const;
  std::vector<PredId> predicates() const;

 private:
  std::map<PredId, TupleSet> relations_;
};

/// Owns the term store so parsed data stays valid when the base is moved.
struct KnowledgeBase {
  std::unique_ptr<TermStore> store = std::make_unique<TermStore>();
  Program program;
  EdbInstance edb;

  TermStore& terms() { return *store; }
  const TermStore& terms() const { return *store; }
};

std::string to_string(const TermStore& store, const Program& program, const Atom& a);
std::string to_string(const TermStore& store, const Program& program, const Clause& c);
std::string to_string(const TermStore& store, const Program& program);

/// Constants occurring in the program and the EDB.
std::vector<TermId> constant_universe(const TermStore& store, const Program& program,
                                      const EdbInstance& edb);
bool has_function_symbols(const TermStore& store, const Program& program,
                          const EdbInstance& edb);

}  // namespace qsqn
