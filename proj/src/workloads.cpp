#include "qsqn/workloads.hpp"

#include <stdexcept>

namespace qsqn {

Workload example1_workload(std::size_t n, std::size_t m) {
  if (n < 2) throw std::invalid_argument("example1 needs a chain length of at least 2");
  Workload w;
  const std::string an = "a" + std::to_string(n);
  w.program =
      "p :- q1(a0," + an + ").\n"
      "p :- q2(a0," + an + ").\n"
      "q1(X,Y) :- r1(X,Y).\n"
      "q1(X,Y) :- r1(X,Z), q1(Z,Y).\n"
      "q2(X,Y) :- r2(X,Y).\n"
      "q2(X,Y) :- r2(X,Z), q2(Z,Y).\n";
  for (std::size_t i = 0; i < n; ++i)
    w.edb += "r1(a" + std::to_string(i) + ",a" + std::to_string(i + 1) + ").\n";
  auto b = [](std::size_t i, std::size_t j) {
    return "b" + std::to_string(i) + "_" + std::to_string(j);
  };
  for (std::size_t j = 1; j <= m; ++j) {
    w.edb += "r2(a0," + b(1, j) + ").\n";
    for (std::size_t i = 1; i + 1 < n; ++i) w.edb += "r2(" + b(i, j) + "," + b(i + 1, j) + ").\n";
    w.edb += "r2(" + b(n - 1, j) + "," + an + ").\n";
  }
  w.query = "?- p.";
  return w;
}

Workload chain_workload(std::size_t n) {
  Workload w;
  w.program = "t(X,Y) :- e(X,Y).\nt(X,Y) :- e(X,Z), t(Z,Y).\n";
  for (std::size_t i = 0; i < n; ++i)
    w.edb += "e(c" + std::to_string(i) + ",c" + std::to_string(i + 1) + ").\n";
  w.query = "?- t(X,Y).";
  return w;
}

}  // namespace qsqn
