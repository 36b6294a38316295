#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <unordered_set>
#include <vector>

#include "qsqn/control.hpp"
#include "qsqn/net.hpp"
#include "qsqn/program.hpp"
#include "qsqn/tuple_set.hpp"

namespace qsqn {

struct EngineConfig {
  unsigned depth_bound = 0;  // l
  NetOptions net;
  StrategyKind strategy = StrategyKind::fifo;
  std::optional<std::size_t> max_answers;  // k
  std::optional<std::chrono::milliseconds> time_limit;
  bool deepen = false;
  unsigned max_depth = 64;  // deepening stops here even if fewer than k answers
  std::size_t page_capacity = 64;
  std::size_t memory_pages = 8;
  bool check_invariants = false;
  std::ostream* trace = nullptr;
};

struct EngineStats {
  std::vector<std::uint64_t> fires;       // per edge
  std::vector<std::uint64_t> transfers;   // per edge, nonempty data only
  std::vector<std::uint64_t> added;       // per node: tuples, pairs or subqueries
  std::vector<std::uint64_t> rejected;    // per node: subsumed on arrival
  std::uint64_t total_fires = 0;
  std::uint64_t edb_reads = 0;            // EDB tuples fetched for unification
  std::uint64_t unifications = 0;
  std::uint64_t depth_rejections = 0;     // items dropped by the term-depth bound
  // single-processing instrumentation
  std::uint64_t subqueries_inserted = 0;
  std::uint64_t reinsertions = 0;         // renaming-equal subquery inserted again
  std::uint64_t consumptions = 0;
  std::uint64_t multi_consumptions = 0;   // an insertion consumed by more than one fire
};

struct Round {
  unsigned depth;
  std::size_t ans_before;
  std::size_t ans_after;
  std::uint64_t fires;
  bool carried;  // every ans tuple present at the round start survived it
};

struct RunResult {
  std::vector<Tuple> ans;      // tuples(ans_q) as stored
  std::vector<Tuple> answers;  // instances of the goal, most general, at most k
  bool partial = false;        // time limit hit
  unsigned depth = 0;          // final l
  std::vector<Round> rounds;
};

/// QSQN evaluation of one goal over one knowledge base. The knowledge base is
/// only read, except that its term store receives new terms. The low-level
/// operations (seed, transfer, fire, active_edge) are public so tests can
/// drive the net by hand.
class Engine : public EngineView {
 public:
  Engine(KnowledgeBase& kb, Atom goal, EngineConfig cfg);
  ~Engine() override;

  RunResult run();

  // --- net operations ---
  void seed();
  bool active_edge(EdgeId e) const;
  std::vector<EdgeId> active_edges() const;
  void fire(EdgeId e);
  void transfer(std::vector<Tuple> data, NodeId u, NodeId v);
  /// Runs the selection loop until no edge is active, k answers are present
  /// or the time limit passes. Returns false on time-out.
  bool loop();
  /// Empties input sets and filter subqueries, then raises l by one.
  void deepen_step();

  // --- contents ---
  const NetStructure& net() const override { return net_; }
  const ModificationClock& clock() const override { return clock_; }
  EdgeProfile profile(EdgeId e) const override;
  const TupleSet& tuples(NodeId v) const;
  const TupleSet& subqueries(NodeId v) const;
  std::vector<Slot> unprocessed(EdgeId e) const;
  std::vector<Slot> unprocessed_subqueries(NodeId v) const;
  std::vector<Slot> unprocessed_sq(NodeId v) const;
  const std::vector<Tuple>& unprocessed_tuples(NodeId v) const;

  /// Key layout of a subquery at v: head tuple followed by x_i delta for the
  /// canonical pre-variables x_1..x_k of v.
  Tuple make_key(NodeId v, std::span<const TermId> t, const Substitution& delta) const;
  Substitution delta_of(NodeId v, std::span<const TermId> key) const;
  std::size_t head_arity(NodeId v) const;
  /// (t, delta) more general than (t2, delta2) w.r.t. v.
  bool more_general(NodeId v, std::span<const TermId> key1, std::span<const TermId> key2) const;

  std::vector<Tuple> goal_answers() const;
  std::size_t answer_count() const;

  unsigned depth_bound() const { return l_; }
  const EngineStats& stats() const { return stats_; }
  const RelationStore& storage() const { return storage_; }
  const Strategy& strategy() const { return *strategy_; }
  const Atom& goal() const { return goal_; }
  TermStore& terms() { return store_; }
  const EngineConfig& config() const { return cfg_; }

  /// Scans the whole net for violated invariants; throws std::logic_error.
  void check_invariants() const;

 private:
  struct NodeState;
  using Data = std::vector<Tuple>;

  NodeState& state(NodeId v) { return *states_[v]; }
  const NodeState& state(NodeId v) const { return *states_[v]; }

  void add_subquery(Tuple key, TupleSet& gamma, NodeId target);
  void add_tuple(std::span<const TermId> t, TupleSet& gamma);
  std::size_t edb_join(NodeId u, std::span<const TermId> key, TupleSet& gamma, NodeId target,
                       bool charge);
  void join_one(NodeId u, std::span<const TermId> key, std::span<const TermId> fact,
                TupleSet& gamma, NodeId target);
  std::vector<Slot> edb_candidates(NodeId u, std::span<const TermId> atom) const;
  std::vector<Slot> ans_candidates(PredId p, std::span<const TermId> atom) const;
  void insert_into_node(NodeId v, std::span<const TermId> stored, std::span<const TermId> probe);
  void insert_subquery(NodeId v, Tuple key);
  void count_transfer(NodeId u, NodeId v);
  Data drain(std::set<Slot>& buf, const TupleSet& set, UnitId unit);
  NodeId landing(NodeId v) const;
  bool inputs_resident(EdgeId e) const;
  void required_pages(EdgeId e, std::vector<std::pair<UnitId, std::size_t>>& out) const;
  bool time_up() const;
  void check_subquery_form(NodeId v, std::span<const TermId> key) const;
  void trace_line(const std::string& s) const;

  KnowledgeBase& kb_;
  TermStore& store_;
  Atom goal_;
  EngineConfig cfg_;
  unsigned l_;
  NetStructure net_;
  std::vector<std::unique_ptr<NodeState>> states_;
  std::vector<UnitId> edb_unit_;  // by predicate id
  ModificationClock clock_;
  RelationStore storage_;
  std::unique_ptr<Strategy> strategy_;
  EngineStats stats_;
  std::chrono::steady_clock::time_point started_;
  std::uint64_t answers_seen_stamp_ = ~0ull;
  mutable std::size_t answer_count_cache_ = 0;
};

/// Goal instances obtained from stored answer tuples: each tuple is unified
/// with a fresh variant of the goal; the most general results are kept.
std::vector<Tuple> answers_for_goal(TermStore& store, const Atom& goal,
                                    const std::vector<Tuple>& ans);

}  // namespace qsqn
