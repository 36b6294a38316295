#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "testkit.hpp"

using namespace qsqn;
using testkit::pred;

namespace {

constexpr const char* kEx2 = "p(X,Y) :- q(X,Y).\np(X,Y) :- q(X,Z), p(Z,Y).\n";

KnowledgeBase kb_of(std::string_view prog) {
  KnowledgeBase kb;
  parse_program(kb, prog);
  return kb;
}

std::set<std::pair<std::string, std::string>> edge_names(const NetStructure& net) {
  std::set<std::pair<std::string, std::string>> out;
  for (const NetEdge& e : net.edges()) out.emplace(net.node(e.from).name, net.node(e.to).name);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Net, Example2Structure) {
  auto kb = kb_of(kEx2);
  NetStructure net = build_structure(kb.terms(), kb.program, {});
  EXPECT_EQ(net.nodes().size(), 9u);
  std::set<std::pair<std::string, std::string>> want{
      {"input_p", "pre_filter_1"},      {"input_p", "pre_filter_2"},
      {"pre_filter_1", "filter_1_1"},   {"filter_1_1", "post_filter_1"},
      {"post_filter_1", "ans_p"},       {"pre_filter_2", "filter_2_1"},
      {"filter_2_1", "filter_2_2"},     {"filter_2_2", "post_filter_2"},
      {"filter_2_2", "input_p"},        {"ans_p", "filter_2_2"},
      {"post_filter_2", "ans_p"}};
  EXPECT_EQ(edge_names(net), want);
  EXPECT_EQ(net.edges().size(), 11u);
  EXPECT_EQ(net.node(net.filter(1, 1)).succ, net.filter(1, 2));
  EXPECT_EQ(net.node(net.filter(1, 2)).succ2, net.input(pred(kb, "p")));
  EXPECT_EQ(net.node(net.filter(1, 2)).succ, net.post_filter(1));
}

TEST(Net, PreAndPostVariables) {
  auto kb = kb_of(kEx2);
  NetStructure net = build_structure(kb.terms(), kb.program, {});
  const TermStore& ts = kb.terms();
  auto names = [&](const Tuple& vs) {
    std::string s;
    for (TermId v : vs) s += ts.to_string(v);
    return s;
  };
  EXPECT_EQ(names(net.node(net.filter(1, 1)).pre_vars), "XZY");
  EXPECT_EQ(names(net.node(net.filter(1, 1)).post_vars), "ZY");
  EXPECT_EQ(names(net.node(net.filter(1, 2)).pre_vars), "ZY");
  EXPECT_TRUE(net.node(net.filter(1, 2)).post_vars.empty());
  EXPECT_TRUE(net.node(net.filter(0, 1)).post_vars.empty());
  EXPECT_EQ(names(net.node(net.pre_filter(1)).post_vars), "XZY");
}

TEST(Net, TailRecursionEliminationStructure) {
  auto kb = kb_of(kEx2);
  NetOptions o;
  o.tre = true;
  o.tre_preds = {pred(kb, "p")};
  NetStructure net = build_structure(kb.terms(), kb.program, o);
  EXPECT_EQ(net.nodes().size(), 8u);
  EXPECT_EQ(net.post_filter(1), kNone);
  NodeId f22 = net.filter(1, 2);
  EXPECT_EQ(net.node(f22).succ, kNone);
  ASSERT_EQ(net.node(f22).out.size(), 1u);
  EXPECT_EQ(net.edge(net.node(f22).out[0]).to, net.input(pred(kb, "p")));
  EXPECT_TRUE(net.node(f22).in.size() == 1);  // no (ans_p, filter_2_2)
  EXPECT_EQ(net.edges().size(), 8u);
  EXPECT_TRUE(net.pair_input(pred(kb, "p")));
}

TEST(Net, TreFlagWithoutTailClauseChangesNothingStructural) {
  auto kb = kb_of("p(X,Y) :- q(X,Y).\np(X,Y) :- p(X,Z), q(Z,Y).\n");
  NetOptions o;
  o.tre = true;
  o.tre_preds = {pred(kb, "p")};
  NetStructure a = build_structure(kb.terms(), kb.program, o);
  NetStructure b = build_structure(kb.terms(), kb.program, {});
  EXPECT_EQ(edge_names(a), edge_names(b));
}

TEST(Net, EmptyBodyClause) {
  auto kb = kb_of("p :- .");
  NetStructure net = build_structure(kb.terms(), kb.program, {});
  EXPECT_EQ(net.nodes().size(), 4u);
  EXPECT_TRUE(net.find_edge(net.pre_filter(0), net.post_filter(0)).has_value());
}

TEST(Net, BuildIsDeterministic) {
  auto kb = kb_of(kEx2);
  EXPECT_EQ(to_dot(kb.terms(), kb.program, build_structure(kb.terms(), kb.program, {})),
            to_dot(kb.terms(), kb.program, build_structure(kb.terms(), kb.program, {})));
}

TEST(Net, GoldenDot) {
  auto kb = kb_of(kEx2);
  NetOptions tre;
  tre.tre = true;
  tre.tre_preds = {pred(kb, "p")};
  EXPECT_EQ(to_dot(kb.terms(), kb.program, build_structure(kb.terms(), kb.program, {})),
            slurp(QSQN_GOLDEN_DIR "/example2.dot"));
  EXPECT_EQ(to_dot(kb.terms(), kb.program, build_structure(kb.terms(), kb.program, tre)),
            slurp(QSQN_GOLDEN_DIR "/example2_tre.dot"));
}

TEST(Net, EmptyProgramHasNoNodes) {
  KnowledgeBase kb;
  NetStructure net = build_structure(kb.terms(), kb.program, {});
  EXPECT_TRUE(net.nodes().empty());
  EXPECT_EQ(to_dot(kb.terms(), kb.program, net).find("->"), std::string::npos);
}
