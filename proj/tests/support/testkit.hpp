#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "qsqn/engine.hpp"
#include "qsqn/parser.hpp"

namespace qsqn::testkit {

struct Loaded {
  KnowledgeBase kb;
  Atom goal;
};

inline Loaded load(std::string_view prog, std::string_view edb, std::string_view query) {
  Loaded l;
  parse_program(l.kb, prog);
  if (!edb.empty()) parse_edb(l.kb, edb);
  l.goal = normalize_query(l.kb, parse_query(l.kb, query)).goal;
  return l;
}

inline std::vector<std::string> strs(const TermStore& store, const std::vector<Tuple>& ts) {
  std::vector<std::string> out;
  for (const Tuple& t : ts) out.push_back(store.to_string(t));
  std::sort(out.begin(), out.end());
  return out;
}

inline PredId pred(const KnowledgeBase& kb, std::string_view n) { return *kb.program.find(n); }

}  // namespace qsqn::testkit
