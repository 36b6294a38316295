#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qsqn/program.hpp"

namespace qsqn {

enum class NodeKind : std::uint8_t { input, ans, pre_filter, filter, post_filter };

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;
inline constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

struct NetNode {
  NodeKind kind;
  std::string name;
  PredId pred{};          // input/ans: p; filter: pred(v); pre/post: head predicate
  std::size_t clause = 0; // 0-based clause index (pre/filter/post)
  std::size_t pos = 0;    // 1-based body position j (filter)
  Atom atom;              // pre_filter: head A_i; filter: B_{i,j}
  Tuple pre_vars;         // canonical first-occurrence order
  Tuple post_vars;
  bool idb = false;             // filter over an intensional predicate
  bool memorize = false;        // T(v) for extensional filters
  bool tail_terminal = false;   // last filter of a clause whose post filter was eliminated
  NodeId succ = kNone;
  NodeId succ2 = kNone;
  std::vector<EdgeId> out;  // canonical order
  std::vector<EdgeId> in;
};

struct NetEdge {
  NodeId from;
  NodeId to;
};

struct NetOptions {
  bool tre = false;
  std::set<PredId> tre_preds;  // T(p) = true
  bool memorize = true;        // T for every extensional filter
};

/// Topology and node annotations of a QSQ-net (or of its tail recursion
/// eliminated variant). Contents live in the engine.
class NetStructure {
 public:
  const std::vector<NetNode>& nodes() const { return nodes_; }
  const std::vector<NetEdge>& edges() const { return edges_; }
  const NetNode& node(NodeId v) const { return nodes_[v]; }
  const NetEdge& edge(EdgeId e) const { return edges_[e]; }

  NodeId input(PredId p) const;
  NodeId ans(PredId p) const;
  NodeId pre_filter(std::size_t clause) const { return pre_[clause]; }
  NodeId post_filter(std::size_t clause) const { return post_[clause]; }  // kNone if eliminated
  NodeId filter(std::size_t clause, std::size_t j) const { return filters_[clause][j - 1]; }
  std::optional<EdgeId> find_edge(NodeId u, NodeId v) const;

  bool tre() const { return tre_; }
  /// T(p) for an intensional predicate (always false outside TRE mode).
  bool pair_input(PredId p) const { return tre_ && tre_preds_.count(p) > 0; }

 private:
  friend NetStructure build_structure(TermStore&, const Program&, const NetOptions&);
  NodeId add_node(NetNode n);
  EdgeId add_edge(NodeId u, NodeId v);

  std::vector<NetNode> nodes_;
  std::vector<NetEdge> edges_;
  std::vector<NodeId> input_, ans_;  // indexed by predicate id
  std::vector<NodeId> pre_, post_;
  std::vector<std::vector<NodeId>> filters_;
  bool tre_ = false;
  std::set<PredId> tre_preds_;
};

NetStructure build_structure(TermStore& store, const Program& program, const NetOptions& opts);

/// Graphviz rendering of the topology with node kinds and T annotations.
std::string to_dot(const TermStore& store, const Program& program, const NetStructure& net);

const char* kind_name(NodeKind k);

}  // namespace qsqn
