#include "qsqn/term.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace qsqn {

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::uint64_t pair_key(TermId a, TermId b) {
  return (static_cast<std::uint64_t>(index_of(a)) << 32) | index_of(b);
}

}  // namespace

TermStore::TermStore() { nodes_.reserve(1024); }

SymbolId TermStore::symbol(std::string_view name) {
  auto it = symbol_index_.find(std::string(name));
  if (it != symbol_index_.end()) return it->second;
  SymbolId id{static_cast<std::uint32_t>(symbols_.size())};
  symbols_.emplace_back(name);
  symbol_index_.emplace(symbols_.back(), id);
  return id;
}

TermId TermStore::make(SymbolId functor, std::span<const TermId> children) {
  std::size_t h = mix(0x51ed27, index_of(functor));
  for (TermId c : children) h = mix(h, index_of(c));
  h = mix(h, children.size());
  auto& bucket = dedup_[h];
  for (TermId candidate : bucket) {
    const Node& n = node(candidate);
    if (n.is_var || n.head != index_of(functor) || n.arity != children.size()) continue;
    if (std::equal(children.begin(), children.end(), children_.begin() + n.first_child))
      return candidate;
  }
  Node n{};
  n.head = index_of(functor);
  n.first_child = static_cast<std::uint32_t>(children_.size());
  n.arity = static_cast<std::uint32_t>(children.size());
  n.is_var = false;
  n.ground = true;
  n.depth = 0;
  unsigned max_child = 0;
  for (TermId c : children) {
    const Node& cn = node(c);
    n.ground = n.ground && cn.ground;
    max_child = std::max<unsigned>(max_child, cn.depth);
  }
  if (!children.empty()) n.depth = max_child + 1;
  children_.insert(children_.end(), children.begin(), children.end());
  TermId id{static_cast<std::uint32_t>(nodes_.size())};
  nodes_.push_back(n);
  bucket.push_back(id);
  return id;
}

TermId TermStore::add_variable(VarSpace space, std::uint64_t number, std::string name) {
  Node n{};
  n.head = static_cast<std::uint32_t>(vars_.size());
  n.first_child = 0;
  n.arity = 0;
  n.depth = 0;
  n.is_var = true;
  n.ground = false;
  vars_.push_back({space, number, std::move(name)});
  TermId id{static_cast<std::uint32_t>(nodes_.size())};
  nodes_.push_back(n);
  return id;
}

TermId TermStore::new_variable(std::string_view display_name) {
  return add_variable(VarSpace::user, next_fresh_[0]++, std::string(display_name));
}

TermId TermStore::fresh_variable(VarSpace space) {
  if (space == VarSpace::user) throw std::invalid_argument("fresh_variable: user space");
  auto n = next_fresh_[static_cast<int>(space)]++;
  std::string prefix = space == VarSpace::engine ? "_G" : space == VarSpace::oracle ? "_O" : "_C";
  return add_variable(space, n, prefix + std::to_string(n));
}

TermId TermStore::canonical_variable(std::size_t i) {
  while (canonical_.size() <= i) canonical_.push_back(fresh_variable(VarSpace::canonical));
  return canonical_[i];
}

VarSpace TermStore::var_space(TermId t) const {
  const Node& n = node(t);
  if (!n.is_var) throw std::invalid_argument("var_space: not a variable");
  return vars_[n.head].space;
}

void TermStore::print(TermId t, std::string& out) const {
  const Node& n = node(t);
  if (n.is_var) {
    out += vars_[n.head].name;
    return;
  }
  out += symbols_[n.head];
  if (n.arity == 0) return;
  out += '(';
  for (std::uint32_t i = 0; i < n.arity; ++i) {
    if (i) out += ',';
    print(children_[n.first_child + i], out);
  }
  out += ')';
}

std::string TermStore::to_string(TermId t) const {
  std::string out;
  print(t, out);
  return out;
}

std::string TermStore::to_string(std::span<const TermId> tuple) const {
  std::string out = "(";
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    if (i) out += ',';
    print(tuple[i], out);
  }
  out += ')';
  return out;
}

// ---------------------------------------------------------------------------

Substitution Substitution::from(std::vector<Binding> bindings) {
  // identities dropped; the first binding of a variable wins
  std::erase_if(bindings, [](const Binding& b) { return b.var == b.term; });
  auto by_var = [](const Binding& x, const Binding& y) { return x.var < y.var; };
  if (bindings.size() <= 16) {
    for (std::size_t i = 1; i < bindings.size(); ++i)
      for (std::size_t j = i; j > 0 && by_var(bindings[j], bindings[j - 1]); --j)
        std::swap(bindings[j], bindings[j - 1]);
  } else {
    std::stable_sort(bindings.begin(), bindings.end(), by_var);
  }
  bindings.erase(std::unique(bindings.begin(), bindings.end(),
                             [](const Binding& x, const Binding& y) { return x.var == y.var; }),
                 bindings.end());
  Substitution s;
  s.bindings_ = std::move(bindings);
  return s;
}

std::optional<TermId> Substitution::lookup(TermId var) const {
  auto pos = std::lower_bound(bindings_.begin(), bindings_.end(), var,
                              [](const Binding& x, TermId v) { return x.var < v; });
  if (pos != bindings_.end() && pos->var == var) return pos->term;
  return std::nullopt;
}

void Substitution::set(TermId var, TermId term) {
  auto pos = std::lower_bound(bindings_.begin(), bindings_.end(), var,
                              [](const Binding& x, TermId v) { return x.var < v; });
  bool present = pos != bindings_.end() && pos->var == var;
  if (var == term) {
    if (present) bindings_.erase(pos);
    return;
  }
  if (present)
    pos->term = term;
  else
    bindings_.insert(pos, {var, term});
}

// ---------------------------------------------------------------------------

namespace {

class Applier {
 public:
  Applier(TermStore& store, const Substitution& s) : store_(store), s_(s) {}

  TermId operator()(TermId t) {
    if (store_.is_ground(t)) return t;
    if (store_.is_variable(t)) return s_.lookup(t).value_or(t);
    if (auto it = memo_.find(t); it != memo_.end()) return it->second;
    auto args = store_.args(t);
    Tuple out(args.begin(), args.end());
    bool changed = false;
    for (TermId& a : out) {
      TermId n = (*this)(a);
      changed = changed || n != a;
      a = n;
    }
    TermId r = changed ? store_.make(store_.functor(t), out) : t;
    memo_.emplace(t, r);
    return r;
  }

 private:
  TermStore& store_;
  const Substitution& s_;
  std::unordered_map<TermId, TermId> memo_;
};

}  // namespace

TermId apply(TermStore& store, const Substitution& s, TermId t) {
  if (s.empty()) return t;
  return Applier(store, s)(t);
}

Tuple apply(TermStore& store, const Substitution& s, std::span<const TermId> tuple) {
  Tuple out(tuple.begin(), tuple.end());
  if (s.empty()) return out;
  Applier a(store, s);
  for (TermId& t : out) t = a(t);
  return out;
}

Substitution compose(TermStore& store, const Substitution& first, const Substitution& second) {
  std::vector<Binding> out;
  out.reserve(first.size() + second.size());
  Applier a(store, second);
  for (const Binding& b : first) {
    TermId t = a(b.term);
    if (t != b.var) out.push_back({b.var, t});
  }
  for (const Binding& b : second)
    if (!first.binds(b.var)) out.push_back(b);
  return Substitution::from(std::move(out));
}

Substitution restrict(const Substitution& s, std::span<const TermId> vars) {
  std::vector<Binding> out;
  for (const Binding& b : s)
    if (std::find(vars.begin(), vars.end(), b.var) != vars.end()) out.push_back(b);
  return Substitution::from(std::move(out));
}

// ---------------------------------------------------------------------------

namespace {

class Unifier {
 public:
  explicit Unifier(TermStore& store) : store_(store) {
    stack_.clear();
    if (!bind_.empty()) bind_.clear();
    order_.clear();
    vals_.clear();
    if (!seen_.empty()) seen_.clear();
    if (!resolved_.empty()) resolved_.clear();
  }

  bool unify(std::span<const TermId> lhs, std::span<const TermId> rhs) {
    if (lhs.size() != rhs.size()) return false;
    for (std::size_t i = lhs.size(); i-- > 0;) stack_.emplace_back(lhs[i], rhs[i]);
    while (!stack_.empty()) {
      auto [a, b] = stack_.back();
      stack_.pop_back();
      a = deref(a);
      b = deref(b);
      if (a == b) continue;
      bool av = store_.is_variable(a);
      bool bv = store_.is_variable(b);
      if (av) {
        if (occurs(a, b)) return false;
        bind(a, b);
        continue;
      }
      if (bv) {
        if (occurs(b, a)) return false;
        bind(b, a);
        continue;
      }
      if (store_.functor(a) != store_.functor(b) || store_.arity(a) != store_.arity(b))
        return false;
      if (store_.is_ground(a) && store_.is_ground(b)) return false;  // distinct ids
      if (!seen_.insert(pair_key(a, b)).second) continue;
      auto aa = store_.args(a);
      auto ba = store_.args(b);
      for (std::size_t i = aa.size(); i-- > 0;) stack_.emplace_back(aa[i], ba[i]);
    }
    return true;
  }

  Substitution result() {
    std::vector<Binding> out;
    out.reserve(order_.size());
    for (TermId v : order_) out.push_back({v, resolve(v)});
    return Substitution::from(std::move(out));
  }

 private:
  // Few bindings per unification in practice: scan order_/vals_ until it gets big.
  static constexpr std::size_t kFlat = 16;

  std::optional<TermId> bound(TermId v) const {
    if (order_.size() <= kFlat) {
      for (std::size_t i = 0; i < order_.size(); ++i)
        if (order_[i] == v) return vals_[i];
      return std::nullopt;
    }
    auto it = bind_.find(v);
    if (it == bind_.end()) return std::nullopt;
    return it->second;
  }

  void bind(TermId v, TermId t) {
    order_.push_back(v);
    vals_.push_back(t);
    if (order_.size() == kFlat + 1) {
      for (std::size_t i = 0; i < order_.size(); ++i) bind_.emplace(order_[i], vals_[i]);
    } else if (order_.size() > kFlat) {
      bind_.emplace(v, t);
    }
  }

  TermId deref(TermId t) const {
    while (store_.is_variable(t)) {
      auto b = bound(t);
      if (!b) break;
      t = *b;
    }
    return t;
  }

  bool occurs(TermId var, TermId t) {
    if (store_.is_ground(t)) return false;
    if (TermId d = deref(t); store_.is_variable(d)) return d == var;
    std::vector<TermId> todo{t};
    std::unordered_set<TermId> visited;
    while (!todo.empty()) {
      TermId u = deref(todo.back());
      todo.pop_back();
      if (u == var) return true;
      if (store_.is_ground(u) || store_.is_variable(u)) continue;
      if (!visited.insert(u).second) continue;
      for (TermId c : store_.args(u)) todo.push_back(c);
    }
    return false;
  }

  TermId resolve(TermId t) {
    if (store_.is_ground(t)) return t;
    if (auto it = resolved_.find(t); it != resolved_.end()) return it->second;
    TermId r;
    if (store_.is_variable(t)) {
      auto b = bound(t);
      r = b ? resolve(*b) : t;
    } else {
      auto args = store_.args(t);
      Tuple out(args.begin(), args.end());
      for (TermId& a : out) a = resolve(a);
      r = store_.make(store_.functor(t), out);
    }
    resolved_.emplace(t, r);
    return r;
  }

  // scratch is reused across calls; unify never nests
  struct Scratch {
    std::vector<std::pair<TermId, TermId>> stack;
    std::unordered_map<TermId, TermId> bind;
    std::vector<TermId> order;
    std::vector<TermId> vals;
    std::unordered_set<std::uint64_t> seen;
    std::unordered_map<TermId, TermId> resolved;
  };
  static Scratch& scratch() {
    thread_local Scratch s;
    return s;
  }

  TermStore& store_;
  Scratch& sc_ = scratch();
  std::vector<std::pair<TermId, TermId>>& stack_ = sc_.stack;
  std::unordered_map<TermId, TermId>& bind_ = sc_.bind;
  std::vector<TermId>& order_ = sc_.order;
  std::vector<TermId>& vals_ = sc_.vals;
  std::unordered_set<std::uint64_t>& seen_ = sc_.seen;
  std::unordered_map<TermId, TermId>& resolved_ = sc_.resolved;
};

}  // namespace

std::optional<Substitution> unify(TermStore& store, std::span<const TermId> lhs,
                                  std::span<const TermId> rhs) {
  Unifier u(store);
  if (!u.unify(lhs, rhs)) return std::nullopt;
  return u.result();
}

std::optional<Substitution> unify(TermStore& store, TermId lhs, TermId rhs) {
  return unify(store, std::span<const TermId>(&lhs, 1), std::span<const TermId>(&rhs, 1));
}

namespace {

template <typename OnBind>
bool match_impl(const TermStore& store, std::span<const TermId> pattern,
                std::span<const TermId> target, std::unordered_map<TermId, TermId>& bind,
                OnBind on_bind) {
  if (pattern.size() != target.size()) return false;
  std::vector<std::pair<TermId, TermId>> stack;
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t i = pattern.size(); i-- > 0;) stack.emplace_back(pattern[i], target[i]);
  while (!stack.empty()) {
    auto [p, t] = stack.back();
    stack.pop_back();
    if (store.is_ground(p)) {
      if (p != t) return false;
      continue;
    }
    if (store.is_variable(p)) {
      auto [it, inserted] = bind.emplace(p, t);
      if (!inserted) {
        if (it->second != t) return false;
      } else {
        on_bind(p);
      }
      continue;
    }
    if (store.is_variable(t) || store.functor(p) != store.functor(t) ||
        store.arity(p) != store.arity(t))
      return false;
    if (!seen.insert(pair_key(p, t)).second) continue;
    auto pa = store.args(p);
    auto ta = store.args(t);
    for (std::size_t i = pa.size(); i-- > 0;) stack.emplace_back(pa[i], ta[i]);
  }
  return true;
}

}  // namespace

std::optional<Substitution> match(const TermStore& store, std::span<const TermId> pattern,
                                  std::span<const TermId> target) {
  std::unordered_map<TermId, TermId> bind;
  std::vector<TermId> order;
  if (!match_impl(store, pattern, target, bind, [&](TermId v) { order.push_back(v); }))
    return std::nullopt;
  std::vector<Binding> out;
  out.reserve(order.size());
  for (TermId v : order) out.push_back({v, bind[v]});
  return Substitution::from(std::move(out));
}

bool matches(const TermStore& store, std::span<const TermId> pattern,
             std::span<const TermId> target) {
  if (pattern.size() != target.size()) return false;
  // Hot in subsumption checks: flat scratch buffers, no memo for shared
  // subterms. Big or deep instances go through match_impl instead.
  constexpr std::size_t kFlat = 32;
  thread_local std::vector<std::pair<TermId, TermId>> bind, stack;
  bind.clear();
  stack.clear();
  std::size_t expanded = 0;
  bool bail = false;
  // 0 mismatch, 1 fine, 2 compound to expand
  auto step = [&](TermId p, TermId t) -> int {
    if (store.is_ground(p)) return p == t;
    if (store.is_variable(p)) {
      for (const auto& b : bind)
        if (b.first == p) return b.second == t;
      if (bind.size() == kFlat) bail = true;
      else bind.emplace_back(p, t);
      return 1;
    }
    if (store.is_variable(t) || store.functor(p) != store.functor(t) ||
        store.arity(p) != store.arity(t))
      return 0;
    if (++expanded > kFlat) bail = true;
    return 2;
  };
  auto expand = [&](TermId p, TermId t) {
    auto pa = store.args(p);
    auto ta = store.args(t);
    for (std::size_t i = pa.size(); i-- > 0;) stack.emplace_back(pa[i], ta[i]);
    while (!stack.empty() && !bail) {
      auto [q, u] = stack.back();
      stack.pop_back();
      int r = step(q, u);
      if (r == 0) return false;
      if (r == 2 && !bail) {
        auto qa = store.args(q);
        auto ua = store.args(u);
        for (std::size_t i = qa.size(); i-- > 0;) stack.emplace_back(qa[i], ua[i]);
      }
    }
    return true;
  };
  for (std::size_t i = 0; i < pattern.size() && !bail; ++i) {
    int r = step(pattern[i], target[i]);
    if (r == 0) return false;
    if (r == 2 && !bail && !expand(pattern[i], target[i])) return false;
  }
  if (!bail) return true;
  std::unordered_map<TermId, TermId> slow;
  return match_impl(store, pattern, target, slow, [](TermId) {});
}

bool is_variant(const TermStore& store, std::span<const TermId> a, std::span<const TermId> b) {
  return matches(store, a, b) && matches(store, b, a);
}

// ---------------------------------------------------------------------------

unsigned term_depth(const TermStore& store, std::span<const TermId> tuple) {
  unsigned d = 0;
  for (TermId t : tuple) d = std::max(d, store.depth(t));
  return d;
}

unsigned term_depth(const TermStore& store, const Substitution& s) {
  unsigned d = 0;
  for (const Binding& b : s) d = std::max(d, store.depth(b.term));
  return d;
}

namespace {

std::pair<std::size_t, std::size_t> count_dag(const TermStore& store,
                                              std::span<const TermId> roots) {
  std::unordered_set<TermId> visited;
  std::vector<TermId> todo(roots.begin(), roots.end());
  std::size_t edges = 0;
  while (!todo.empty()) {
    TermId t = todo.back();
    todo.pop_back();
    if (!visited.insert(t).second) continue;
    auto args = store.args(t);
    edges += args.size();
    for (TermId c : args) todo.push_back(c);
  }
  return {visited.size(), edges};
}

}  // namespace

std::size_t dag_size(const TermStore& store, TermId t) {
  auto [nodes, edges] = count_dag(store, std::span<const TermId>(&t, 1));
  return nodes + edges;
}

std::size_t dag_size(const TermStore& store, std::span<const TermId> tuple) {
  std::size_t total = 0;
  for (TermId t : tuple) total += dag_size(store, t);
  return total;
}

std::size_t dag_size(const TermStore& store, const Substitution& s) {
  std::size_t total = s.size();
  for (const Binding& b : s) total += dag_size(store, b.term);
  return total;
}

std::size_t dag_node_count(const TermStore& store, std::span<const TermId> roots) {
  return count_dag(store, roots).first;
}

namespace {

void collect_into(const TermStore& store, TermId t, std::vector<TermId>& out,
                  std::unordered_set<TermId>& visited) {
  if (store.is_ground(t)) return;
  if (store.is_variable(t)) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    return;
  }
  if (!visited.insert(t).second) return;
  for (TermId c : store.args(t)) collect_into(store, c, out, visited);
}

}  // namespace

void collect_variables(const TermStore& store, TermId t, std::vector<TermId>& out) {
  std::unordered_set<TermId> visited;
  collect_into(store, t, out, visited);
}

std::vector<TermId> variables_of(const TermStore& store, std::span<const TermId> tuple) {
  std::vector<TermId> out;
  std::unordered_set<TermId> visited;
  for (TermId t : tuple) collect_into(store, t, out, visited);
  return out;
}

bool is_ground(const TermStore& store, std::span<const TermId> tuple) {
  return std::all_of(tuple.begin(), tuple.end(), [&](TermId t) { return store.is_ground(t); });
}

TermId Renamer::rename(TermId t) {
  if (store_.is_ground(t)) return t;
  if (auto it = memo_.find(t); it != memo_.end()) return it->second;
  TermId r;
  if (store_.is_variable(t)) {
    r = store_.fresh_variable(space_);
    renaming_.set(t, r);
  } else {
    auto args = store_.args(t);
    Tuple out(args.begin(), args.end());
    for (TermId& a : out) a = rename(a);
    r = store_.make(store_.functor(t), out);
  }
  memo_.emplace(t, r);
  return r;
}

Tuple Renamer::rename(std::span<const TermId> tuple) {
  Tuple out(tuple.begin(), tuple.end());
  for (TermId& t : out) t = rename(t);
  return out;
}

Tuple fresh_variant(TermStore& store, std::span<const TermId> tuple, VarSpace space) {
  Renamer r(store, space);
  return r.rename(tuple);
}

Tuple canonical_form(TermStore& store, std::span<const TermId> tuple) {
  auto vars = variables_of(store, tuple);
  if (vars.empty()) return Tuple(tuple.begin(), tuple.end());
  std::vector<Binding> bs;
  bs.reserve(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) bs.push_back({vars[i], store.canonical_variable(i)});
  return apply(store, Substitution::from(std::move(bs)), tuple);
}

std::string to_string(const TermStore& store, const Substitution& s) {
  std::string out = "{";
  bool first = true;
  for (const Binding& b : s) {
    if (!first) out += ", ";
    first = false;
    out += store.to_string(b.var);
    out += '/';
    out += store.to_string(b.term);
  }
  out += '}';
  return out;
}

std::size_t TupleHash::operator()(std::span<const TermId> t) const noexcept {
  std::size_t h = t.size();
  for (TermId x : t) h = mix(h, index_of(x));
  return h;
}

}  // namespace qsqn
