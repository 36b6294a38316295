#include "qsqn/engine.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace qsqn {

struct Engine::NodeState {
  TupleSet set;  // tuples or pairs (input, ans); subquery keys (filter)
  std::vector<std::set<Slot>> unprocessed;  // parallel to the node's out edges
  std::set<Slot> unproc_sub;
  std::set<Slot> unproc_sq;
  std::vector<Tuple> unproc_tuples;
  std::unordered_set<Tuple, TupleHash> unproc_tuples_seen;
  // canonical forms of every subquery inserted since the last clear
  std::unordered_set<Tuple, TupleHash> history;
  std::unordered_map<Slot, std::uint32_t> consumed_sub, consumed_sq;
  UnitId unit = 0;
  mutable Slot checked = 0;  // members below this slot passed check_invariants
};

namespace {

void append(Tuple& out, std::span<const TermId> more) { out.insert(out.end(), more.begin(), more.end()); }

std::size_t index_in(const Tuple& vars, TermId x) {
  return static_cast<std::size_t>(std::find(vars.begin(), vars.end(), x) - vars.begin());
}

}  // namespace

Engine::Engine(KnowledgeBase& kb, Atom goal, EngineConfig cfg)
    : kb_(kb),
      store_(kb.terms()),
      goal_(std::move(goal)),
      cfg_(std::move(cfg)),
      l_(cfg_.depth_bound),
      storage_(cfg_.page_capacity, cfg_.memory_pages),
      strategy_(make_strategy(cfg_.strategy)) {
  if (!kb_.program.is_intensional(goal_.pred))
    throw std::invalid_argument("goal predicate must be intensional");
  net_ = build_structure(store_, kb_.program, cfg_.net);
  const auto& nodes = net_.nodes();
  clock_.resize(nodes.size());
  stats_.fires.assign(net_.edges().size(), 0);
  stats_.transfers.assign(net_.edges().size(), 0);
  stats_.added.assign(nodes.size(), 0);
  stats_.rejected.assign(nodes.size(), 0);
  for (NodeId v = 0; v < nodes.size(); ++v) {
    const NetNode& n = nodes[v];
    auto st = std::make_unique<NodeState>();
    std::size_t width = 0;
    switch (n.kind) {
      case NodeKind::input:
        width = kb_.program.predicate(n.pred).arity * (net_.pair_input(n.pred) ? 2 : 1);
        st->unit = storage_.unit("tuples:" + n.name);
        break;
      case NodeKind::ans:
        width = kb_.program.predicate(n.pred).arity;
        st->unit = storage_.unit("tuples:" + n.name);
        break;
      case NodeKind::filter:
        width = head_arity(v) + n.pre_vars.size();
        st->unit = storage_.unit("subqueries:" + n.name);
        break;
      default:
        width = head_arity(v);
        break;
    }
    st->set = TupleSet(store_, width);
    st->unprocessed.resize(n.out.size());
    states_.push_back(std::move(st));
  }
  edb_unit_.assign(kb_.program.predicates().size(), 0);
  for (std::uint32_t k = 0; k < kb_.program.predicates().size(); ++k)
    if (!kb_.program.is_intensional(PredId{k})) {
      edb_unit_[k] = storage_.unit("edb:" + kb_.program.predicates()[k].name);
      if (const TupleSet* rel = kb_.edb.relation(PredId{k}); rel && !rel->empty())
        storage_.preallocate(edb_unit_[k], rel->slots().back() + 1);
    }
}

Engine::~Engine() = default;

// ---------------------------------------------------------------------------
// Accessors

std::size_t Engine::head_arity(NodeId v) const {
  const NetNode& n = net_.node(v);
  if (n.kind == NodeKind::input || n.kind == NodeKind::ans)
    return kb_.program.predicate(n.pred).arity;
  return kb_.program.predicate(kb_.program.clause(n.clause).head.pred).arity;
}

const TupleSet& Engine::tuples(NodeId v) const { return state(v).set; }
const TupleSet& Engine::subqueries(NodeId v) const { return state(v).set; }

std::vector<Slot> Engine::unprocessed(EdgeId e) const {
  const NetNode& u = net_.node(net_.edge(e).from);
  auto pos = std::find(u.out.begin(), u.out.end(), e) - u.out.begin();
  const auto& buf = state(net_.edge(e).from).unprocessed[pos];
  return {buf.begin(), buf.end()};
}

std::vector<Slot> Engine::unprocessed_subqueries(NodeId v) const {
  return {state(v).unproc_sub.begin(), state(v).unproc_sub.end()};
}

std::vector<Slot> Engine::unprocessed_sq(NodeId v) const {
  return {state(v).unproc_sq.begin(), state(v).unproc_sq.end()};
}

const std::vector<Tuple>& Engine::unprocessed_tuples(NodeId v) const {
  return state(v).unproc_tuples;
}

Tuple Engine::make_key(NodeId v, std::span<const TermId> t, const Substitution& delta) const {
  Tuple key(t.begin(), t.end());
  for (TermId x : net_.node(v).pre_vars) key.push_back(delta.lookup(x).value_or(x));
  return key;
}

Substitution Engine::delta_of(NodeId v, std::span<const TermId> key) const {
  const Tuple& xs = net_.node(v).pre_vars;
  const std::size_t n = key.size() - xs.size();
  std::vector<Binding> bs;
  bs.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (key[n + i] != xs[i]) bs.push_back({xs[i], key[n + i]});
  return Substitution::from(std::move(bs));
}

bool Engine::more_general(NodeId, std::span<const TermId> key1,
                          std::span<const TermId> key2) const {
  return matches(store_, key1, key2);
}

// ---------------------------------------------------------------------------
// add-subquery, add-tuple

void Engine::add_subquery(Tuple key, TupleSet& gamma, NodeId) {
  if (term_depth(store_, key) > l_) {
    ++stats_.depth_rejections;
    return;
  }
  insert_most_general(gamma, store_, std::move(key));
}

void Engine::add_tuple(std::span<const TermId> t, TupleSet& gamma) {
  insert_most_general(gamma, store_, fresh_variant(store_, t, VarSpace::engine));
}

// ---------------------------------------------------------------------------
// Joins

namespace {

// Per-subquery data reused across every fact it is unified with.
struct Prepared {
  Tuple atom;     // atom(u) delta
  Tuple carried;  // t followed by x delta for x in postVars(u)
};

}  // namespace

std::vector<Slot> Engine::edb_candidates(NodeId u, std::span<const TermId> atom) const {
  const TupleSet* rel = kb_.edb.relation(net_.node(u).pred);
  if (!rel) return {};
  std::vector<std::pair<std::size_t, TermId>> probes;
  for (std::size_t k = 0; k < atom.size(); ++k)
    if (store_.is_ground(atom[k])) probes.emplace_back(k, atom[k]);
  return rel->unifiable_candidates(probes);
}

std::vector<Slot> Engine::ans_candidates(PredId p, std::span<const TermId> atom) const {
  std::vector<std::pair<std::size_t, TermId>> probes;
  for (std::size_t k = 0; k < atom.size(); ++k)
    if (store_.is_ground(atom[k])) probes.emplace_back(k, atom[k]);
  return state(net_.ans(p)).set.unifiable_candidates(probes);
}

void Engine::join_one(NodeId u, std::span<const TermId> key, std::span<const TermId> fact,
                      TupleSet& gamma, NodeId target) {
  const NetNode& n = net_.node(u);
  Substitution delta = delta_of(u, key);
  Tuple atom = apply(store_, delta, n.atom.args);
  const bool ground = is_ground(store_, fact);
  Tuple fresh = ground ? Tuple{} : fresh_variant(store_, fact, VarSpace::engine);
  ++stats_.unifications;
  auto gam = unify(store_, atom, ground ? fact : std::span<const TermId>(fresh));
  if (!gam) return;
  if (cfg_.check_invariants && !(compose(store_, *gam, *gam) == *gam))
    throw std::logic_error("mgu is not idempotent");
  Tuple carried(key.begin(), key.begin() + head_arity(u));
  for (TermId x : n.post_vars) carried.push_back(delta.lookup(x).value_or(x));
  add_subquery(apply(store_, *gam, carried), gamma, target);
}

std::size_t Engine::edb_join(NodeId u, std::span<const TermId> key, TupleSet& gamma,
                             NodeId target, bool charge) {
  const NetNode& n = net_.node(u);
  Substitution delta = delta_of(u, key);
  Prepared prep;
  prep.atom = apply(store_, delta, n.atom.args);
  prep.carried.assign(key.begin(), key.begin() + head_arity(u));
  for (TermId x : n.post_vars) prep.carried.push_back(delta.lookup(x).value_or(x));
  const TupleSet* rel = kb_.edb.relation(n.pred);
  if (!rel) return 0;
  std::vector<Slot> cands = edb_candidates(u, prep.atom);
  stats_.edb_reads += cands.size();
  if (charge) storage_.touch_items(edb_unit_[index_of(n.pred)], cands);
  for (Slot s : cands) {
    TupleView fact = (*rel)[s];
    const bool ground = is_ground(store_, fact);
    Tuple fresh = ground ? Tuple{} : fresh_variant(store_, fact, VarSpace::engine);
    ++stats_.unifications;
    auto gam = unify(store_, prep.atom, ground ? fact : TupleView(fresh));
    if (!gam) continue;
    if (cfg_.check_invariants && !(compose(store_, *gam, *gam) == *gam))
      throw std::logic_error("mgu is not idempotent");
    add_subquery(apply(store_, *gam, prep.carried), gamma, target);
  }
  return cands.size();
}

// ---------------------------------------------------------------------------
// transfer / transfer2

void Engine::count_transfer(NodeId u, NodeId v) {
  if (auto e = net_.find_edge(u, v))
    ++stats_.transfers[*e];
  else
    throw std::logic_error("transfer along a missing edge");
}

void Engine::insert_into_node(NodeId v, std::span<const TermId> stored,
                              std::span<const TermId> probe) {
  NodeState& st = state(v);
  if (subsumed_by_any(st.set, store_, probe)) {
    ++stats_.rejected[v];
    return;
  }
  for (Slot s : st.set.instance_candidates(probe)) {
    if (!matches(store_, probe, st.set[s])) continue;
    st.set.erase(s);
    for (auto& buf : st.unprocessed) buf.erase(s);
  }
  Slot s = st.set.insert(Tuple(stored.begin(), stored.end()));
  for (auto& buf : st.unprocessed) buf.insert(s);
  ++stats_.added[v];
  clock_.touch(v);
  storage_.write_item(st.unit, s);
}

void Engine::insert_subquery(NodeId v, Tuple key) {
  NodeState& st = state(v);
  const NetNode& n = net_.node(v);
  if (cfg_.check_invariants) check_subquery_form(v, key);
  Tuple canon = canonical_form(store_, key);
  if (!st.history.insert(std::move(canon)).second) ++stats_.reinsertions;
  Slot s = st.set.insert(std::move(key));
  if (!n.tail_terminal) st.unproc_sub.insert(s);
  if (n.idb) st.unproc_sq.insert(s);
  ++stats_.added[v];
  ++stats_.subqueries_inserted;
  clock_.touch(v);
  storage_.write_item(st.unit, s);
}

void Engine::transfer(Data data, NodeId u, NodeId v) {
  // Each branch makes at most one further transfer, always as its last step,
  // so the recursion of the procedure is a loop here.
  while (!data.empty()) {
    count_transfer(u, v);
    const NetNode& U = net_.node(u);
    const NetNode& V = net_.node(v);

    if (U.kind == NodeKind::input) {
      const bool pairs = net_.pair_input(U.pred);
      const std::size_t n = kb_.program.predicate(U.pred).arity;
      TupleSet gamma(store_, head_arity(V.succ) + net_.node(V.succ).pre_vars.size());
      for (const Tuple& d : data) {
        std::span<const TermId> t(d.data(), n);
        std::span<const TermId> carried = pairs ? std::span<const TermId>(d.data() + n, n) : t;
        ++stats_.unifications;
        auto gam = unify(store_, t, V.atom.args);
        if (!gam) continue;
        Tuple key = apply(store_, *gam, carried);
        for (TermId x : V.post_vars) key.push_back(gam->lookup(x).value_or(x));
        add_subquery(std::move(key), gamma, V.succ);
      }
      data.clear();
      gamma.for_each([&](Slot, TupleView k) { data.emplace_back(k.begin(), k.end()); });
      u = v;
      v = V.succ;
      continue;
    }

    if (U.kind == NodeKind::ans) {
      NodeState& st = state(v);
      for (Tuple& t : data)
        if (st.unproc_tuples_seen.insert(t).second) st.unproc_tuples.push_back(std::move(t));
      clock_.touch(v);
      return;
    }

    if (V.kind == NodeKind::input || V.kind == NodeKind::ans) {
      for (const Tuple& t : data) {
        if (cfg_.check_invariants && t.size() != state(v).set.width())
          throw std::logic_error("tuple of wrong width sent to " + V.name);
        Tuple fresh = fresh_variant(store_, t, VarSpace::engine);
        // ans keeps the tuple as sent, input keeps the fresh variant
        insert_into_node(v, V.kind == NodeKind::ans ? std::span<const TermId>(t) : fresh, fresh);
      }
      return;
    }

    if (V.kind == NodeKind::filter && !V.idb && !V.memorize) {
      TupleSet gamma(store_, head_arity(V.succ) + net_.node(V.succ).pre_vars.size());
      for (const Tuple& key : data) {
        Tuple atom = apply(store_, delta_of(v, key), V.atom.args);
        if (term_depth(store_, atom) > l_) {
          ++stats_.depth_rejections;
          continue;
        }
        edb_join(v, key, gamma, V.succ, true);
      }
      data.clear();
      gamma.for_each([&](Slot, TupleView k) { data.emplace_back(k.begin(), k.end()); });
      u = v;
      v = V.succ;
      continue;
    }

    if (V.kind == NodeKind::filter) {
      NodeState& st = state(v);
      for (Tuple& key : data) {
        if (cfg_.check_invariants && key.size() != st.set.width())
          throw std::logic_error("subquery of wrong width sent to " + V.name);
        Tuple atom = apply(store_, delta_of(v, key), V.atom.args);
        if (term_depth(store_, atom) > l_) {
          ++stats_.depth_rejections;
          continue;
        }
        if (subsumed_by_any(st.set, store_, key)) {
          ++stats_.rejected[v];
          continue;
        }
        for (Slot s : st.set.instance_candidates(key)) {
          if (!matches(store_, key, st.set[s])) continue;
          st.set.erase(s);
          st.unproc_sub.erase(s);
          st.unproc_sq.erase(s);
        }
        insert_subquery(v, std::move(key));
      }
      return;
    }

    if (V.kind == NodeKind::post_filter) {
      // keys at a post filter are bare tuples: (t, epsilon)
      u = v;
      v = V.succ;
      continue;
    }

    throw std::logic_error("transfer into " + V.name + " has no meaning");
  }
}

// ---------------------------------------------------------------------------
// active-edge, fire / fire2

bool Engine::active_edge(EdgeId e) const {
  const NetEdge& ed = net_.edge(e);
  const NetNode& u = net_.node(ed.from);
  const NodeState& st = state(ed.from);
  switch (u.kind) {
    case NodeKind::pre_filter:
    case NodeKind::post_filter:
      return false;
    case NodeKind::input:
    case NodeKind::ans: {
      auto pos = std::find(u.out.begin(), u.out.end(), e) - u.out.begin();
      return !st.unprocessed[pos].empty();
    }
    case NodeKind::filter:
      if (!u.idb) return u.memorize && !st.unproc_sub.empty();
      if (ed.to == u.succ2) return !st.unproc_sq.empty();
      return !st.unproc_sub.empty() || !st.unproc_tuples.empty();
  }
  return false;
}

std::vector<EdgeId> Engine::active_edges() const {
  std::vector<EdgeId> out;
  for (EdgeId e = 0; e < net_.edges().size(); ++e)
    if (active_edge(e)) out.push_back(e);
  return out;
}

Engine::Data Engine::drain(std::set<Slot>& buf, const TupleSet& set, UnitId unit) {
  std::vector<Slot> slots(buf.begin(), buf.end());
  storage_.touch_items(unit, slots);
  Data out;
  out.reserve(slots.size());
  for (Slot s : slots) {
    TupleView t = set[s];
    out.emplace_back(t.begin(), t.end());
  }
  buf.clear();
  return out;
}

void Engine::fire(EdgeId e) {
  if (!active_edge(e)) throw std::logic_error("fire on an inactive edge");
  const NodeId u = net_.edge(e).from;
  const NodeId v = net_.edge(e).to;
  const NetNode& U = net_.node(u);
  NodeState& st = state(u);
  ++stats_.fires[e];
  ++stats_.total_fires;
  std::size_t consumed = 0;
  Data out;

  auto note_consumed = [&](std::unordered_map<Slot, std::uint32_t>& seen, Slot s) {
    ++stats_.consumptions;
    if (++seen[s] == 2) ++stats_.multi_consumptions;
  };

  if (U.kind == NodeKind::input || U.kind == NodeKind::ans) {
    auto pos = std::find(U.out.begin(), U.out.end(), e) - U.out.begin();
    out = drain(st.unprocessed[pos], st.set, st.unit);
    consumed = out.size();
  } else if (!U.idb) {
    TupleSet gamma(store_, head_arity(v) + net_.node(v).pre_vars.size());
    std::vector<Slot> slots(st.unproc_sub.begin(), st.unproc_sub.end());
    storage_.touch_items(st.unit, slots);
    for (Slot s : slots) {
      note_consumed(st.consumed_sub, s);
      edb_join(u, st.set[s], gamma, v, true);
    }
    st.unproc_sub.clear();
    consumed = slots.size();
    gamma.for_each([&](Slot, TupleView k) { out.emplace_back(k.begin(), k.end()); });
  } else if (v == U.succ2) {
    const PredId p = U.pred;
    const std::size_t n = kb_.program.predicate(p).arity;
    const bool pairs = net_.pair_input(p);
    TupleSet gamma(store_, pairs ? 2 * n : n);
    std::vector<Slot> slots(st.unproc_sq.begin(), st.unproc_sq.end());
    storage_.touch_items(st.unit, slots);
    for (Slot s : slots) {
      note_consumed(st.consumed_sq, s);
      TupleView key = st.set[s];
      Tuple t2 = apply(store_, delta_of(u, key), U.atom.args);  // p(t2) = atom(u) delta
      if (!pairs) {
        add_tuple(t2, gamma);
      } else {
        // compute-gamma: the tail call carries the caller's goal tuple
        Tuple pair = t2;
        if (U.tail_terminal)
          append(pair, std::span<const TermId>(key.data(), head_arity(u)));
        else
          append(pair, t2);
        add_tuple(pair, gamma);
      }
    }
    st.unproc_sq.clear();
    consumed = slots.size();
    gamma.for_each([&](Slot, TupleView t) { out.emplace_back(t.begin(), t.end()); });
  } else {
    const PredId p = U.pred;
    const NodeState& ans = state(net_.ans(p));
    TupleSet gamma(store_, head_arity(v) + net_.node(v).pre_vars.size());
    std::vector<Slot> slots(st.unproc_sub.begin(), st.unproc_sub.end());
    storage_.touch_items(st.unit, slots);
    for (Slot s : slots) {
      note_consumed(st.consumed_sub, s);
      TupleView key = st.set[s];
      Tuple atom = apply(store_, delta_of(u, key), U.atom.args);
      std::vector<Slot> cands = ans_candidates(p, atom);
      storage_.touch_items(ans.unit, cands);
      for (Slot a : cands) join_one(u, key, ans.set[a], gamma, v);
    }
    st.unproc_sub.clear();
    consumed = slots.size();
    if (!st.unproc_tuples.empty()) {
      // probe subquery keys on the columns holding the atom's variables
      const std::size_t n = head_arity(u);
      for (const Tuple& t : st.unproc_tuples) {
        std::vector<std::pair<std::size_t, TermId>> probes;
        for (std::size_t k = 0; k < U.atom.args.size(); ++k) {
          TermId x = U.atom.args[k];
          if (!store_.is_variable(x) || !store_.is_ground(t[k])) continue;
          probes.emplace_back(n + index_in(U.pre_vars, x), t[k]);
        }
        std::vector<Slot> cands = st.set.unifiable_candidates(probes);
        storage_.touch_items(st.unit, cands);
        for (Slot s : cands) join_one(u, st.set[s], t, gamma, v);
      }
      consumed += st.unproc_tuples.size();
      st.unproc_tuples.clear();
      st.unproc_tuples_seen.clear();
    }
    gamma.for_each([&](Slot, TupleView k) { out.emplace_back(k.begin(), k.end()); });
  }

  std::size_t produced = out.size();
  transfer(std::move(out), u, v);
  if (cfg_.trace)
    trace_line("fire " + U.name + " -> " + net_.node(v).name + " in=" + std::to_string(consumed) +
               " out=" + std::to_string(produced));
}

// ---------------------------------------------------------------------------
// Algorithms 1 and 2, deepening

void Engine::seed() {
  NodeId in = net_.input(goal_.pred);
  NodeState& st = state(in);
  // A goal deeper than l cannot yield an answer within the bound.
  if (term_depth(store_, goal_.args) > l_) {
    ++stats_.depth_rejections;
    return;
  }
  Tuple x = fresh_variant(store_, goal_.args, VarSpace::engine);
  if (net_.pair_input(goal_.pred)) {
    Tuple pair = x;
    append(pair, x);
    x = std::move(pair);
  }
  if (subsumed_by_any(st.set, store_, x)) return;
  Slot s = st.set.insert(std::move(x));
  for (auto& buf : st.unprocessed) buf.insert(s);
  ++stats_.added[in];
  clock_.touch(in);
  storage_.write_item(st.unit, s);
}

bool Engine::time_up() const {
  return cfg_.time_limit && std::chrono::steady_clock::now() - started_ > *cfg_.time_limit;
}

std::size_t Engine::answer_count() const {
  NodeId a = net_.ans(goal_.pred);
  auto stamp = clock_.stamp(a);
  if (stamp != answers_seen_stamp_) {
    answer_count_cache_ = goal_answers().size();
    const_cast<Engine*>(this)->answers_seen_stamp_ = stamp;
  }
  return answer_count_cache_;
}

bool Engine::loop() {
  while (true) {
    if (time_up()) return false;
    if (cfg_.max_answers && answer_count() >= *cfg_.max_answers) return true;
    std::vector<EdgeId> act = active_edges();
    if (act.empty()) return true;
    EdgeId e = strategy_->select(act, *this);
    if (cfg_.check_invariants && !std::binary_search(act.begin(), act.end(), e))
      throw std::logic_error("strategy returned an inactive edge");
    fire(e);
    if (cfg_.check_invariants) check_invariants();
  }
}

void Engine::deepen_step() {
  for (NodeId v = 0; v < net_.nodes().size(); ++v) {
    const NetNode& n = net_.node(v);
    NodeState& st = state(v);
    if (n.kind == NodeKind::input) {
      st.set.clear();
      st.checked = 0;
      for (auto& buf : st.unprocessed) buf.clear();
      storage_.drop_unit(st.unit);
    } else if (n.kind == NodeKind::filter) {
      st.set.clear();
      st.checked = 0;
      st.unproc_sub.clear();
      st.unproc_sq.clear();
      st.history.clear();
      st.consumed_sub.clear();
      st.consumed_sq.clear();
      storage_.drop_unit(st.unit);
    }
  }
  ++l_;
}

RunResult Engine::run() {
  started_ = std::chrono::steady_clock::now();
  RunResult r;
  const NodeId ans = net_.ans(goal_.pred);
  auto reached_k = [&] { return cfg_.max_answers && answer_count() >= *cfg_.max_answers; };

  std::uint64_t fires0 = stats_.total_fires;
  std::uint64_t rejections0 = stats_.depth_rejections;
  seed();
  bool in_time = loop();
  r.rounds.push_back({l_, 0, state(ans).set.size(), stats_.total_fires - fires0, true});
  if (cfg_.trace) trace_line("round l=" + std::to_string(l_) + " ans=" + std::to_string(state(ans).set.size()));

  // Another round can only help when the last one dropped something for depth.
  while (cfg_.deepen && in_time && !reached_k() && l_ < cfg_.max_depth &&
         stats_.depth_rejections > rejections0) {
    std::vector<Slot> before = state(ans).set.slots();
    deepen_step();
    bool carried = std::all_of(before.begin(), before.end(),
                               [&](Slot s) { return state(ans).set.alive(s); });
    fires0 = stats_.total_fires;
    rejections0 = stats_.depth_rejections;
    seed();
    in_time = loop();
    r.rounds.push_back({l_, before.size(), state(ans).set.size(), stats_.total_fires - fires0, carried});
    if (cfg_.trace)
      trace_line("round l=" + std::to_string(l_) + " carried=" + std::to_string(before.size()) +
                 (carried ? " kept" : " LOST") + " ans=" + std::to_string(state(ans).set.size()));
  }

  r.partial = !in_time;
  r.depth = l_;
  state(ans).set.for_each([&](Slot, TupleView t) { r.ans.emplace_back(t.begin(), t.end()); });
  r.answers = goal_answers();
  if (cfg_.max_answers && r.answers.size() > *cfg_.max_answers) r.answers.resize(*cfg_.max_answers);
  return r;
}

std::vector<Tuple> Engine::goal_answers() const {
  std::vector<Tuple> ans;
  state(net_.ans(goal_.pred)).set.for_each([&](Slot, TupleView t) { ans.emplace_back(t.begin(), t.end()); });
  return answers_for_goal(store_, goal_, ans);
}

std::vector<Tuple> answers_for_goal(TermStore& store, const Atom& goal,
                                    const std::vector<Tuple>& ans) {
  TupleSet acc(store, goal.args.size());
  for (const Tuple& t : ans) {
    Tuple g = fresh_variant(store, goal.args, VarSpace::engine);
    Tuple f = fresh_variant(store, t, VarSpace::engine);
    auto m = unify(store, g, f);
    if (!m) continue;
    insert_most_general(acc, store, apply(store, *m, g));
  }
  std::vector<Tuple> out;
  acc.for_each([&](Slot, TupleView t) { out.emplace_back(t.begin(), t.end()); });
  return out;
}

// ---------------------------------------------------------------------------
// Storage profile for the disk-minimizing strategy

NodeId Engine::landing(NodeId v) const {
  while (true) {
    const NetNode& n = net_.node(v);
    bool passes = n.kind == NodeKind::pre_filter || n.kind == NodeKind::post_filter ||
                  (n.kind == NodeKind::filter && !n.idb && !n.memorize);
    if (!passes || n.succ == kNone) return v;
    v = n.succ;
  }
}

void Engine::required_pages(EdgeId e, std::vector<std::pair<UnitId, std::size_t>>& out) const {
  const NodeId u = net_.edge(e).from;
  const NodeId v = net_.edge(e).to;
  const NetNode& U = net_.node(u);
  const NodeState& st = state(u);
  auto add_slots = [&](UnitId unit, const auto& slots) {
    for (Slot s : slots) out.emplace_back(unit, storage_.page_of(s));
  };
  if (U.kind == NodeKind::input || U.kind == NodeKind::ans) {
    auto pos = std::find(U.out.begin(), U.out.end(), e) - U.out.begin();
    add_slots(st.unit, st.unprocessed[pos]);
  } else if (!U.idb) {
    add_slots(st.unit, st.unproc_sub);
    UnitId edb = edb_unit_[index_of(U.pred)];
    for (Slot s : st.unproc_sub) {
      Tuple atom = apply(store_, delta_of(u, st.set[s]), U.atom.args);
      add_slots(edb, edb_candidates(u, atom));
    }
  } else if (v == U.succ2) {
    add_slots(st.unit, st.unproc_sq);
  } else {
    add_slots(st.unit, st.unproc_sub);
    UnitId ans = state(net_.ans(U.pred)).unit;
    for (Slot s : st.unproc_sub) {
      Tuple atom = apply(store_, delta_of(u, st.set[s]), U.atom.args);
      add_slots(ans, ans_candidates(U.pred, atom));
    }
    if (!st.unproc_tuples.empty()) add_slots(st.unit, st.set.slots());
  }
}

bool Engine::inputs_resident(EdgeId e) const {
  const NodeId u = net_.edge(e).from;
  const NetNode& U = net_.node(u);
  const NodeState& st = state(u);
  auto unit_resident = [&](UnitId unit, std::size_t items) {
    for (std::size_t p = 0; p * storage_.capacity() < items; ++p)
      if (!storage_.resident(unit, p)) return false;
    return true;
  };
  if (U.kind == NodeKind::pre_filter || U.kind == NodeKind::post_filter) return false;
  // new items land on the tail page
  std::size_t tail = st.set.slots().empty() ? 0 : st.set.slots().back();
  if (!st.set.empty() && !storage_.resident(st.unit, storage_.page_of(tail))) return false;
  if (U.kind == NodeKind::filter && !U.idb) {
    const TupleSet* rel = kb_.edb.relation(U.pred);
    return !rel || unit_resident(edb_unit_[index_of(U.pred)], rel->slots().empty() ? 0 : rel->slots().back() + 1);
  }
  if (U.kind == NodeKind::filter && net_.edge(e).to != U.succ2) {
    const TupleSet& ans = state(net_.ans(U.pred)).set;
    return unit_resident(state(net_.ans(U.pred)).unit, ans.empty() ? 0 : ans.slots().back() + 1);
  }
  return true;
}

EdgeProfile Engine::profile(EdgeId e) const {
  EdgeProfile p;
  std::vector<std::pair<UnitId, std::size_t>> pages;
  required_pages(e, pages);
  p.in_memory = std::all_of(pages.begin(), pages.end(),
                            [&](const auto& up) { return storage_.resident(up.first, up.second); });
  const NodeId u = net_.edge(e).from;
  const NetNode& U = net_.node(u);
  const NodeState& st = state(u);
  if (U.kind == NodeKind::input || U.kind == NodeKind::ans) {
    auto pos = std::find(U.out.begin(), U.out.end(), e) - U.out.begin();
    p.items = st.unprocessed[pos].size();
  } else if (U.idb && net_.edge(e).to == U.succ2) {
    p.items = st.unproc_sq.size();
  } else {
    p.items = st.unproc_sub.size() + st.unproc_tuples.size();
  }
  NodeId land = U.kind == NodeKind::ans ? net_.edge(e).to : landing(net_.edge(e).to);
  for (EdgeId f : net_.node(land).out)
    if (inputs_resident(f)) ++p.enabled_in_memory;
  return p;
}

// ---------------------------------------------------------------------------
// Invariants and tracing

void Engine::check_subquery_form(NodeId v, std::span<const TermId> key) const {
  const Tuple& xs = net_.node(v).pre_vars;
  const std::size_t n = key.size() - xs.size();
  std::vector<TermId> tvars = variables_of(store_, key.first(n));
  std::vector<TermId> bound;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (key[n + i] != xs[i]) bound.push_back(xs[i]);
  for (TermId x : bound) {
    if (std::find(tvars.begin(), tvars.end(), x) != tvars.end())
      throw std::logic_error("subquery at " + net_.node(v).name + ": dom(delta) meets Var(t)");
    // idempotence: no bound variable occurs in the range
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (key[n + i] == xs[i]) continue;
      std::vector<TermId> rv;
      collect_variables(store_, key[n + i], rv);
      if (std::find(rv.begin(), rv.end(), x) != rv.end())
        throw std::logic_error("subquery at " + net_.node(v).name + ": delta not idempotent");
    }
  }
}

void Engine::check_invariants() const {
  auto fail = [](const std::string& what) { throw std::logic_error(what); };
  for (NodeId v = 0; v < net_.nodes().size(); ++v) {
    const NetNode& n = net_.node(v);
    const NodeState& st = state(v);
    if (n.kind == NodeKind::pre_filter || n.kind == NodeKind::post_filter) continue;
    // Members only leave a set or get added, so pairs of old members stay
    // incomparable; each new member is compared in both directions.
    st.set.for_each_from(st.checked, [&](Slot s, TupleView t) {
      if (n.kind != NodeKind::ans && term_depth(store_, t) > l_) fail("depth bound exceeded at " + n.name);
      for (Slot c : st.set.generalizer_candidates(t))
        if (c != s && matches(store_, st.set[c], t)) fail("antichain violated at " + n.name);
      for (Slot c : st.set.instance_candidates(t))
        if (c != s && matches(store_, t, st.set[c])) fail("antichain violated at " + n.name);
      if (n.kind == NodeKind::filter) check_subquery_form(v, t);
    });
    auto subset = [&](const std::set<Slot>& buf, const char* what) {
      for (Slot s : buf)
        if (!st.set.alive(s)) fail(std::string(what) + " not a subset at " + n.name);
    };
    for (const auto& buf : st.unprocessed) subset(buf, "unprocessed");
    if (n.kind == NodeKind::filter) {
      subset(st.unproc_sub, "unprocessedSubqueries");
      subset(st.unproc_sq, "unprocessedSQ");
      if (!n.idb && !n.memorize && !st.set.empty()) fail("non-memorizing filter stores subqueries");
      if (n.tail_terminal && (!st.unproc_sub.empty() || !st.unproc_tuples.empty()))
        fail("tail filter holds fields it does not have");
    }
    st.checked = st.set.end_slot();
  }
}

void Engine::trace_line(const std::string& s) const { *cfg_.trace << s << '\n'; }

}  // namespace qsqn
