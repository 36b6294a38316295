#include "qsqn/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <stdexcept>
#include <unordered_map>

namespace qsqn {

namespace {

// Robinson unification over a binding store with a trail. Deliberately
// naive: bindings are triangular and terms are rebuilt only when reported.
class Sld {
 public:
  Sld(KnowledgeBase& kb, const SldOptions& opts) : kb_(kb), st_(kb.terms()), opts_(opts) {}

  SldResult solve(const Atom& goal) {
    SldResult r;
    goal_ = goal;
    for (std::size_t limit = 8;; limit *= 2) {
      cut_ = false;
      std::vector<Atom> stack{goal};
      dfs(stack, 0, limit, r);
      if (aborted_ || (cut_ && limit >= opts_.max_length)) {
        r.truncated = true;
        break;
      }
      if (!cut_) break;
    }
    r.steps = steps_;
    return r;
  }

 private:
  TermId walk(TermId t) const {
    while (st_.is_variable(t)) {
      auto it = bind_.find(t);
      if (it == bind_.end()) break;
      t = it->second;
    }
    return t;
  }

  bool occurs(TermId v, TermId t) const {
    t = walk(t);
    if (t == v) return true;
    if (st_.is_variable(t) || st_.is_ground(t)) return false;
    for (TermId c : st_.args(t))
      if (occurs(v, c)) return true;
    return false;
  }

  bool unify(TermId a, TermId b) {
    a = walk(a);
    b = walk(b);
    if (a == b) return true;
    if (st_.is_variable(a)) {
      if (occurs(a, b)) return false;
      bind_[a] = b;
      trail_.push_back(a);
      return true;
    }
    if (st_.is_variable(b)) return unify(b, a);
    if (st_.functor(a) != st_.functor(b) || st_.arity(a) != st_.arity(b)) return false;
    auto xa = st_.args(a);
    auto xb = st_.args(b);
    for (std::size_t k = 0; k < xa.size(); ++k)
      if (!unify(xa[k], xb[k])) return false;
    return true;
  }

  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      bind_.erase(trail_.back());
      trail_.pop_back();
    }
  }

  unsigned depth(TermId t) const {
    t = walk(t);
    if (st_.is_variable(t) || st_.is_ground(t)) return st_.depth(t);
    unsigned d = 0;
    for (TermId c : st_.args(t)) d = std::max(d, depth(c));
    return d + 1;
  }

  TermId resolve(TermId t) {
    t = walk(t);
    if (st_.is_variable(t) || st_.is_ground(t)) return t;
    std::vector<TermId> xs;
    for (TermId c : st_.args(t)) xs.push_back(resolve(c));
    return st_.make(st_.functor(t), xs);
  }

  TermId rename(TermId t, std::unordered_map<TermId, TermId>& m) {
    if (st_.is_ground(t)) return t;
    if (st_.is_variable(t)) {
      auto [it, fresh] = m.emplace(t, TermId{});
      if (fresh) it->second = st_.fresh_variable(VarSpace::oracle);
      return it->second;
    }
    std::vector<TermId> xs;
    for (TermId c : st_.args(t)) xs.push_back(rename(c, m));
    return st_.make(st_.functor(t), xs);
  }

  bool within_bound(const std::vector<Atom>& stack) const {
    for (const Atom& a : stack)
      for (TermId t : a.args)
        if (depth(t) > opts_.depth_bound) return false;
    return true;
  }

  void record(SldResult& r) {
    Tuple ans;
    for (TermId t : goal_.args) ans.push_back(resolve(t));
    // variant key: variables numbered by first occurrence
    std::unordered_map<TermId, TermId> canon;
    std::function<TermId(TermId)> key = [&](TermId t) -> TermId {
      if (st_.is_ground(t)) return t;
      if (st_.is_variable(t)) {
        auto it = canon.find(t);
        if (it == canon.end()) it = canon.emplace(t, st_.canonical_variable(canon.size())).first;
        return it->second;
      }
      std::vector<TermId> xs;
      for (TermId c : st_.args(t)) xs.push_back(key(c));
      return st_.make(st_.functor(t), xs);
    };
    Tuple k;
    for (TermId t : ans) k.push_back(key(t));
    if (seen_.insert(k).second) r.answers.push_back(std::move(ans));
  }

  // Leftmost atom is the back of the stack.
  void dfs(std::vector<Atom>& stack, std::size_t len, std::size_t limit, SldResult& r) {
    if (aborted_) return;
    if (stack.empty()) {
      record(r);
      return;
    }
    if (len == limit) {
      cut_ = true;
      return;
    }
    Atom sel = stack.back();
    stack.pop_back();
    auto try_clause = [&](std::span<const TermId> head, const std::vector<Atom>* body,
                          std::unordered_map<TermId, TermId>& ren) {
      if (++steps_ > opts_.step_budget) {
        aborted_ = true;
        return;
      }
      std::size_t mark = trail_.size();
      bool ok = true;
      for (std::size_t k = 0; ok && k < head.size(); ++k) ok = unify(sel.args[k], rename(head[k], ren));
      if (ok) {
        std::size_t base = stack.size();
        if (body)
          for (auto it = body->rbegin(); it != body->rend(); ++it) {
            Atom b{it->pred, {}};
            for (TermId t : it->args) b.args.push_back(rename(t, ren));
            stack.push_back(std::move(b));
          }
        bool goal_ok = true;
        for (TermId t : goal_.args) goal_ok = goal_ok && depth(t) <= opts_.depth_bound;
        if (goal_ok && within_bound(stack)) dfs(stack, len + 1, limit, r);
        stack.resize(base);
      }
      undo(mark);
    };
    for (std::size_t i : kb_.program.clauses_for(sel.pred)) {
      const Clause& c = kb_.program.clause(i);
      std::unordered_map<TermId, TermId> ren;
      try_clause(c.head.args, &c.body, ren);
      if (aborted_) break;
    }
    if (const TupleSet* rel = kb_.edb.relation(sel.pred); rel && !aborted_) {
      for (Slot s : rel->slots()) {
        std::unordered_map<TermId, TermId> ren;
        TupleView fv = (*rel)[s];
        Tuple fact(fv.begin(), fv.end());
        try_clause(fact, nullptr, ren);
        if (aborted_) break;
      }
    }
    stack.push_back(std::move(sel));
  }

  KnowledgeBase& kb_;
  TermStore& st_;
  SldOptions opts_;
  Atom goal_;
  std::unordered_map<TermId, TermId> bind_;
  std::vector<TermId> trail_;
  std::set<Tuple> seen_;
  std::uint64_t steps_ = 0;
  bool cut_ = false;
  bool aborted_ = false;
};

bool match_into(const TermStore& st, TermId g, TermId x, std::unordered_map<TermId, TermId>& m) {
  if (st.is_variable(g)) {
    auto [it, fresh] = m.emplace(g, x);
    return fresh || it->second == x;
  }
  if (st.is_ground(g)) return g == x;
  if (st.is_variable(x) || st.functor(g) != st.functor(x) || st.arity(g) != st.arity(x)) return false;
  auto ga = st.args(g);
  auto xa = st.args(x);
  for (std::size_t k = 0; k < ga.size(); ++k)
    if (!match_into(st, ga[k], xa[k], m)) return false;
  return true;
}

void collect_consts(const TermStore& st, TermId t, std::set<TermId>& out) {
  if (st.is_variable(t)) return;
  if (st.arity(t) == 0) {
    out.insert(t);
    return;
  }
  for (TermId c : st.args(t)) collect_consts(st, c, out);
}

void collect_vars(const TermStore& st, TermId t, std::vector<TermId>& out) {
  if (st.is_ground(t)) return;
  if (st.is_variable(t)) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    return;
  }
  for (TermId c : st.args(t)) collect_vars(st, c, out);
}

std::uint64_t skolem_counter_next() {
  static std::atomic<std::uint64_t> n{0};
  return n++;
}

unsigned term_depth_of(const TermStore& st, const Tuple& t) {
  unsigned d = 0;
  for (TermId x : t) d = std::max(d, st.depth(x));
  return d;
}

}  // namespace

SldResult sld_answers(KnowledgeBase& kb, const Atom& goal, const SldOptions& opts) {
  return Sld(kb, opts).solve(goal);
}

bool oracle_matches(const TermStore& store, std::span<const TermId> general,
                    std::span<const TermId> instance) {
  if (general.size() != instance.size()) return false;
  std::unordered_map<TermId, TermId> m;
  for (std::size_t k = 0; k < general.size(); ++k)
    if (!match_into(store, general[k], instance[k], m)) return false;
  return true;
}

bool instance_of_any(const TermStore& store, std::span<const TermId> x,
                     const std::vector<Tuple>& generals) {
  return std::any_of(generals.begin(), generals.end(),
                     [&](const Tuple& g) { return oracle_matches(store, g, x); });
}

std::vector<TermId> herbrand_constants(const KnowledgeBase& kb, std::span<const TermId> extra) {
  const TermStore& st = kb.terms();
  std::set<TermId> out(extra.begin(), extra.end());
  for (const Clause& c : kb.program.clauses()) {
    for (TermId t : c.head.args) collect_consts(st, t, out);
    for (const Atom& b : c.body)
      for (TermId t : b.args) collect_consts(st, t, out);
  }
  for (PredId p : kb.edb.predicates())
    kb.edb.relation(p)->for_each([&](Slot, TupleView f) {
      for (TermId t : f) collect_consts(st, t, out);
    });
  return {out.begin(), out.end()};
}

Model tp_fixpoint(const KnowledgeBase& kb, std::span<const TermId> extra) {
  const TermStore& st = kb.terms();
  auto flat = [&](TermId t) { return st.is_variable(t) || st.arity(t) == 0; };
  Model m;
  for (PredId p : kb.edb.predicates())
    kb.edb.relation(p)->for_each([&](Slot, TupleView f) {
      for (TermId t : f)
        if (!st.is_ground(t) || !flat(t))
          throw std::invalid_argument("fixpoint needs ground function-free facts");
      m[p].emplace(f.begin(), f.end());
    });
  for (const Clause& c : kb.program.clauses()) {
    bool ok = std::all_of(c.head.args.begin(), c.head.args.end(), flat);
    for (const Atom& b : c.body) ok = ok && std::all_of(b.args.begin(), b.args.end(), flat);
    if (!ok) throw std::invalid_argument("fixpoint needs a function-free program");
  }
  const std::vector<TermId> universe = herbrand_constants(kb, extra);

  bool changed = true;
  while (changed) {
    changed = false;
    for (const Clause& c : kb.program.clauses()) {
      std::vector<Tuple> derived;
      std::unordered_map<TermId, TermId> env;
      std::function<void(std::size_t)> join = [&](std::size_t j) {
        if (j == c.body.size()) {
          std::vector<TermId> free;
          for (TermId t : c.head.args)
            if (st.is_variable(t) && !env.count(t) &&
                std::find(free.begin(), free.end(), t) == free.end())
              free.push_back(t);
          std::vector<std::size_t> pick(free.size(), 0);
          if (!free.empty() && universe.empty()) return;
          while (true) {
            Tuple h;
            for (TermId t : c.head.args) {
              if (!st.is_variable(t)) h.push_back(t);
              else if (env.count(t)) h.push_back(env[t]);
              else h.push_back(universe[pick[std::find(free.begin(), free.end(), t) - free.begin()]]);
            }
            derived.push_back(std::move(h));
            std::size_t k = 0;
            while (k < pick.size() && ++pick[k] == universe.size()) pick[k++] = 0;
            if (k == pick.size()) break;
          }
          return;
        }
        const Atom& b = c.body[j];
        auto it = m.find(b.pred);
        if (it == m.end()) return;
        for (const Tuple& f : it->second) {
          std::vector<TermId> bound_here;
          bool ok = true;
          for (std::size_t k = 0; ok && k < f.size(); ++k) {
            TermId a = b.args[k];
            if (!st.is_variable(a)) {
              ok = a == f[k];
            } else if (auto e = env.find(a); e != env.end()) {
              ok = e->second == f[k];
            } else {
              env[a] = f[k];
              bound_here.push_back(a);
            }
          }
          if (ok) join(j + 1);
          for (TermId v : bound_here) env.erase(v);
        }
      };
      join(0);
      for (Tuple& h : derived)
        if (m[c.head.pred].insert(std::move(h)).second) changed = true;
    }
  }
  return m;
}

std::set<Tuple> model_answers(const TermStore& store, const Model& m, const Atom& goal) {
  std::set<Tuple> out;
  auto it = m.find(goal.pred);
  if (it == m.end()) return out;
  for (const Tuple& f : it->second)
    if (oracle_matches(store, goal.args, f)) out.insert(f);
  return out;
}

std::set<Tuple> ground_instances(const TermStore& store, const std::vector<Tuple>& tuples,
                                 std::span<const TermId> universe) {
  std::set<Tuple> out;
  for (const Tuple& t : tuples) {
    std::vector<TermId> vars;
    for (TermId x : t) collect_vars(store, x, vars);
    for (TermId x : t)
      if (!store.is_variable(x) && !store.is_ground(x))
        throw std::invalid_argument("ground_instances expects function-free tuples");
    if (vars.empty()) {
      out.insert(t);
      continue;
    }
    if (universe.empty()) continue;
    std::vector<std::size_t> pick(vars.size(), 0);
    while (true) {
      Tuple g;
      for (TermId x : t) {
        auto v = std::find(vars.begin(), vars.end(), x);
        g.push_back(v == vars.end() ? x : universe[pick[v - vars.begin()]]);
      }
      out.insert(std::move(g));
      std::size_t k = 0;
      while (k < pick.size() && ++pick[k] == universe.size()) pick[k++] = 0;
      if (k == pick.size()) break;
    }
  }
  return out;
}

Verdict verify_answer(KnowledgeBase& kb, const Atom& goal, std::span<const TermId> tuple,
                      const Model* model, const SldOptions& opts) {
  TermStore& st = kb.terms();
  std::vector<TermId> vars;
  for (TermId t : tuple) collect_vars(st, t, vars);
  // universal closure: each variable becomes a constant no input mentions
  std::unordered_map<TermId, TermId> sk;
  std::vector<TermId> skolems;
  for (TermId v : vars) {
    TermId c = st.constant("$sk" + std::to_string(skolem_counter_next()));
    sk[v] = c;
    skolems.push_back(c);
  }
  std::function<TermId(TermId)> close = [&](TermId t) -> TermId {
    if (st.is_ground(t)) return t;
    if (st.is_variable(t)) return sk.at(t);
    std::vector<TermId> xs;
    for (TermId c : st.args(t)) xs.push_back(close(c));
    return st.make(st.functor(t), xs);
  };
  Tuple ground;
  for (TermId t : tuple) ground.push_back(close(t));
  if (!oracle_matches(st, goal.args, ground)) return Verdict::incorrect;

  if (model && skolems.empty()) {
    auto it = model->find(goal.pred);
    return it != model->end() && it->second.count(ground) ? Verdict::correct : Verdict::incorrect;
  }
  if (model) {
    Model m = tp_fixpoint(kb, skolems);
    auto it = m.find(goal.pred);
    return it != m.end() && it->second.count(ground) ? Verdict::correct : Verdict::incorrect;
  }
  SldOptions o = opts;
  o.depth_bound = std::max(o.depth_bound, term_depth_of(st, ground));
  SldResult r = sld_answers(kb, Atom{goal.pred, ground}, o);
  if (!r.answers.empty()) return Verdict::correct;
  return r.truncated ? Verdict::inconclusive : Verdict::incorrect;
}

}  // namespace qsqn
