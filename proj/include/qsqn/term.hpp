#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qsqn {

enum class TermId : std::uint32_t {};
enum class SymbolId : std::uint32_t {};

constexpr std::uint32_t index_of(TermId t) { return static_cast<std::uint32_t>(t); }
constexpr std::uint32_t index_of(SymbolId s) { return static_cast<std::uint32_t>(s); }

using Tuple = std::vector<TermId>;

/// Origin of a variable. Each space draws names from its own counter so that
/// variables generated by the engine and by the reference oracle never meet.
enum class VarSpace : std::uint8_t { user, engine, oracle, canonical };

/// Hash-consed store of terms. Every distinct term is represented by exactly
/// one node; compound nodes refer to their children by id, so a term is a
/// rooted DAG whose shared subterms are stored once. Nodes are immutable once
/// created.
class TermStore {
 public:
  TermStore();

  SymbolId symbol(std::string_view name);
  std::string_view symbol_name(SymbolId s) const { return symbols_[index_of(s)]; }

  TermId make(SymbolId functor, std::span<const TermId> children);
  TermId make(std::string_view functor, std::span<const TermId> children) {
    return make(symbol(functor), children);
  }
  TermId make(std::string_view functor, std::initializer_list<TermId> children) {
    return make(symbol(functor), std::span<const TermId>(children.begin(), children.size()));
  }
  TermId constant(std::string_view name) { return make(symbol(name), {}); }

  /// A new user variable; display names are not required to be unique.
  TermId new_variable(std::string_view display_name);
  /// A never-before-used variable from `space` (not `user`).
  TermId fresh_variable(VarSpace space);
  /// The i-th canonical variable, used for renaming-invariant keys.
  TermId canonical_variable(std::size_t i);

  bool is_variable(TermId t) const { return node(t).is_var; }
  bool is_ground(TermId t) const { return node(t).ground; }
  unsigned depth(TermId t) const { return node(t).depth; }
  VarSpace var_space(TermId t) const;
  SymbolId functor(TermId t) const { return SymbolId{node(t).head}; }
  std::size_t arity(TermId t) const { return node(t).arity; }
  std::span<const TermId> args(TermId t) const {
    const Node& n = node(t);
    return {children_.data() + n.first_child, n.arity};
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::string to_string(TermId t) const;
  std::string to_string(std::span<const TermId> tuple) const;

 private:
  struct Node {
    std::uint32_t head;  // symbol id, or variable ordinal
    std::uint32_t first_child;
    std::uint32_t arity;
    std::uint32_t depth;
    bool is_var;
    bool ground;
  };
  struct VarInfo {
    VarSpace space;
    std::uint64_t number;
    std::string name;
  };

  const Node& node(TermId t) const { return nodes_[index_of(t)]; }
  TermId add_variable(VarSpace space, std::uint64_t number, std::string name);
  void print(TermId t, std::string& out) const;

  std::vector<std::string> symbols_;
  std::unordered_map<std::string, SymbolId> symbol_index_;
  std::vector<Node> nodes_;
  std::vector<TermId> children_;
  std::unordered_map<std::size_t, std::vector<TermId>> dedup_;
  std::vector<VarInfo> vars_;
  std::uint64_t next_fresh_[4] = {0, 0, 0, 0};
  std::vector<TermId> canonical_;
};

struct Binding {
  TermId var;
  TermId term;
  friend bool operator==(const Binding&, const Binding&) = default;
};

/// A finite set of bindings x/t with pairwise distinct variables and no x/x,
/// kept sorted by variable id.
class Substitution {
 public:
  Substitution() = default;
  /// Builds from arbitrary bindings; identity bindings are dropped, later
  /// duplicates of a variable are ignored.
  static Substitution from(std::vector<Binding> bindings);

  std::optional<TermId> lookup(TermId var) const;
  bool binds(TermId var) const { return lookup(var).has_value(); }
  bool empty() const { return bindings_.empty(); }
  std::size_t size() const { return bindings_.size(); }
  auto begin() const { return bindings_.begin(); }
  auto end() const { return bindings_.end(); }
  const std::vector<Binding>& bindings() const { return bindings_; }

  /// Adds or replaces the binding for `var`; binding a variable to itself
  /// removes it.
  void set(TermId var, TermId term);

  friend bool operator==(const Substitution&, const Substitution&) = default;

 private:
  std::vector<Binding> bindings_;
};

// Instances.
TermId apply(TermStore& store, const Substitution& s, TermId t);
Tuple apply(TermStore& store, const Substitution& s, std::span<const TermId> tuple);

Substitution compose(TermStore& store, const Substitution& first, const Substitution& second);
Substitution restrict(const Substitution& s, std::span<const TermId> vars);

/// Idempotent most general unifier of two equal-length tuples, with occurs
/// check. Works on the DAG without expanding shared subterms.
std::optional<Substitution> unify(TermStore& store, std::span<const TermId> lhs,
                                  std::span<const TermId> rhs);
std::optional<Substitution> unify(TermStore& store, TermId lhs, TermId rhs);

/// One-sided matching: a substitution g over the variables of `pattern` with
/// pattern g == target. Variables of `target` are treated as constants.
std::optional<Substitution> match(const TermStore& store, std::span<const TermId> pattern,
                                  std::span<const TermId> target);
bool matches(const TermStore& store, std::span<const TermId> pattern,
             std::span<const TermId> target);

/// Returns g with expr == general g when `expr` is an instance of `general`.
inline std::optional<Substitution> is_instance(const TermStore& store,
                                               std::span<const TermId> expr,
                                               std::span<const TermId> general) {
  return match(store, general, expr);
}
bool is_variant(const TermStore& store, std::span<const TermId> a, std::span<const TermId> b);

// Measures.
unsigned term_depth(const TermStore& store, std::span<const TermId> tuple);
unsigned term_depth(const TermStore& store, const Substitution& s);
std::size_t dag_size(const TermStore& store, TermId t);
std::size_t dag_size(const TermStore& store, std::span<const TermId> tuple);
std::size_t dag_size(const TermStore& store, const Substitution& s);
std::size_t dag_node_count(const TermStore& store, std::span<const TermId> roots);

void collect_variables(const TermStore& store, TermId t, std::vector<TermId>& out);
std::vector<TermId> variables_of(const TermStore& store, std::span<const TermId> tuple);
bool is_ground(const TermStore& store, std::span<const TermId> tuple);

/// Renames variables consistently across every call on the same instance, so
/// several expressions can be given one joint fresh variant.
class Renamer {
 public:
  Renamer(TermStore& store, VarSpace space) : store_(store), space_(space) {}
  TermId rename(TermId t);
  Tuple rename(std::span<const TermId> tuple);
  const Substitution& renaming() const { return renaming_; }

 private:
  TermStore& store_;
  VarSpace space_;
  Substitution renaming_;
  std::unordered_map<TermId, TermId> memo_;
};

Tuple fresh_variant(TermStore& store, std::span<const TermId> tuple, VarSpace space);

/// Variables replaced by canonical variables in first-occurrence order; two
/// tuples are variants iff their canonical forms are equal.
Tuple canonical_form(TermStore& store, std::span<const TermId> tuple);

std::string to_string(const TermStore& store, const Substitution& s);

struct TupleHash {
  std::size_t operator()(std::span<const TermId> t) const noexcept;
  std::size_t operator()(const Tuple& t) const noexcept {
    return (*this)(std::span<const TermId>(t));
  }
};

}  // namespace qsqn
