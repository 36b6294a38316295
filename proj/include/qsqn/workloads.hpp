#pragma once

#include <cstddef>
#include <string>

namespace qsqn {

/// Program, EDB and query as source text.
struct Workload {
  std::string program;
  std::string edb;
  std::string query;
};

/// Two right-recursive closures under one propositional goal: q1 over a single
/// r1 chain a0..a_n, q2 over m disjoint r2 paths a0 -> b_1j -> ... -> b_(n-1)j -> a_n.
Workload example1_workload(std::size_t n, std::size_t m);

/// Transitive closure of a chain with n edges, all pairs queried.
Workload chain_workload(std::size_t n);

}  // namespace qsqn
