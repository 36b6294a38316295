#include "qsqn/net.hpp"

#include <algorithm>

namespace qsqn {

const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::input: return "input";
    case NodeKind::ans: return "ans";
    case NodeKind::pre_filter: return "pre_filter";
    case NodeKind::filter: return "filter";
    case NodeKind::post_filter: return "post_filter";
  }
  return "?";
}

NodeId NetStructure::input(PredId p) const {
  return index_of(p) < input_.size() ? input_[index_of(p)] : kNone;
}

NodeId NetStructure::ans(PredId p) const {
  return index_of(p) < ans_.size() ? ans_[index_of(p)] : kNone;
}

std::optional<EdgeId> NetStructure::find_edge(NodeId u, NodeId v) const {
  for (EdgeId e : nodes_[u].out)
    if (edges_[e].to == v) return e;
  return std::nullopt;
}

NodeId NetStructure::add_node(NetNode n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

EdgeId NetStructure::add_edge(NodeId u, NodeId v) {
  EdgeId e = static_cast<EdgeId>(edges_.size());
  edges_.push_back({u, v});
  nodes_[u].out.push_back(e);
  nodes_[v].in.push_back(e);
  return e;
}

namespace {

Tuple vars_of_atoms(const TermStore& store, const std::vector<Atom>& atoms, std::size_t from) {
  Tuple all;
  for (std::size_t k = from; k < atoms.size(); ++k)
    all.insert(all.end(), atoms[k].args.begin(), atoms[k].args.end());
  return variables_of(store, all);
}

NetNode make_node(NodeKind kind, std::string name, PredId pred, std::size_t clause = 0,
                  std::size_t pos = 0) {
  NetNode n;
  n.kind = kind;
  n.name = std::move(name);
  n.pred = pred;
  n.clause = clause;
  n.pos = pos;
  return n;
}

}  // namespace

NetStructure build_structure(TermStore& store, const Program& program, const NetOptions& opts) {
  NetStructure net;
  net.tre_ = opts.tre;
  if (opts.tre) net.tre_preds_ = opts.tre_preds;
  const auto& preds = program.predicates();
  net.input_.assign(preds.size(), kNone);
  net.ans_.assign(preds.size(), kNone);

  for (std::uint32_t k = 0; k < preds.size(); ++k) {
    if (preds[k].kind != PredKind::intensional) continue;
    PredId p{k};
    NetNode in = make_node(NodeKind::input, "input_" + preds[k].name, p);
    NetNode an = make_node(NodeKind::ans, "ans_" + preds[k].name, p);
    net.input_[k] = net.add_node(std::move(in));
    net.ans_[k] = net.add_node(std::move(an));
  }

  const auto& clauses = program.clauses();
  net.pre_.resize(clauses.size());
  net.post_.assign(clauses.size(), kNone);
  net.filters_.resize(clauses.size());

  for (std::size_t i = 0; i < clauses.size(); ++i) {
    const Clause& c = clauses[i];
    const std::string idx = std::to_string(i + 1);
    PredId p = c.head.pred;
    const std::size_t n = c.body.size();
    bool eliminate = n > 0 && net.pair_input(p) && c.body.back().pred == p;

    NetNode pre = make_node(NodeKind::pre_filter, "pre_filter_" + idx, p, i);
    pre.atom = c.head;
    pre.post_vars = vars_of_atoms(store, c.body, 0);
    NodeId pre_id = net.add_node(std::move(pre));
    net.pre_[i] = pre_id;

    for (std::size_t j = 1; j <= n; ++j) {
      const Atom& b = c.body[j - 1];
      NetNode f = make_node(NodeKind::filter, "filter_" + idx + "_" + std::to_string(j), b.pred, i, j);
      f.atom = b;
      f.pre_vars = vars_of_atoms(store, c.body, j - 1);
      f.post_vars = vars_of_atoms(store, c.body, j);
      f.idb = program.is_intensional(b.pred);
      f.memorize = !f.idb && opts.memorize;
      f.tail_terminal = eliminate && j == n;
      net.filters_[i].push_back(net.add_node(std::move(f)));
    }
    if (!eliminate) {
      NetNode post = make_node(NodeKind::post_filter, "post_filter_" + idx, p, i);
      net.post_[i] = net.add_node(std::move(post));
    }

    // Edges, in the canonical order used for tie-breaking.
    net.add_edge(net.input(p), pre_id);
    NodeId first = n > 0 ? net.filters_[i][0] : net.post_[i];
    net.add_edge(pre_id, first);
    net.nodes_[pre_id].succ = first;
    for (std::size_t j = 1; j <= n; ++j) {
      NodeId f = net.filters_[i][j - 1];
      NodeId next = j < n ? net.filters_[i][j] : net.post_[i];
      if (next != kNone) {
        net.add_edge(f, next);
        net.nodes_[f].succ = next;
      }
      if (net.nodes_[f].idb) {
        PredId q = net.nodes_[f].pred;
        net.add_edge(f, net.input(q));
        net.nodes_[f].succ2 = net.input(q);
        if (!net.nodes_[f].tail_terminal) net.add_edge(net.ans(q), f);
      }
    }
    if (net.post_[i] != kNone) {
      net.add_edge(net.post_[i], net.ans(p));
      net.nodes_[net.post_[i]].succ = net.ans(p);
    }
  }
  return net;
}

std::string to_dot(const TermStore& store, const Program& program, const NetStructure& net) {
  std::string out = "digraph qsqn {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const NetNode& v : net.nodes()) {
    std::string label = v.name;
    if (v.kind == NodeKind::filter) {
      label += "\\n" + to_string(store, program, v.atom);
      if (v.idb)
        label += v.tail_terminal ? "\\nidb tail" : "\\nidb";
      else
        label += v.memorize ? "\\nedb T=true" : "\\nedb T=false";
    } else if (v.kind == NodeKind::input && net.pair_input(v.pred)) {
      label += "\\nT=true";
    }
    out += "  \"" + v.name + "\" [label=\"" + label + "\"];\n";
  }
  for (const NetEdge& e : net.edges())
    out += "  \"" + net.node(e.from).name + "\" -> \"" + net.node(e.to).name + "\";\n";
  out += "}\n";
  return out;
}

}  // namespace qsqn
