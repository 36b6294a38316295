#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "qsqn/engine.hpp"
#include "qsqn/oracle.hpp"
#include "qsqn/parser.hpp"
#include "qsqn/workloads.hpp"

using namespace qsqn;
using json = nlohmann::json;

namespace {

enum Exit { ok = 0, usage = 1, parse_failure = 2, partial = 3, discrepancy = 4 };

struct Options {
  std::string program;
  std::vector<std::string> edb;
  std::vector<std::string> csv;  // pred=path
  std::string query;
  unsigned depth = 0;
  std::string strategy = "fifo";
  bool tre = false;
  std::vector<std::string> tre_preds;
  std::string memorize = "all";
  bool deepen = false;
  std::size_t max_answers = 0;
  std::size_t time_limit = 0;
  bool stats = false;
  bool json_out = false;
  std::string dot;
  bool trace = false;
  bool ground = false;
  std::size_t page_capacity = 64;
  std::size_t memory_pages = 8;
  bool check = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void add_input_flags(CLI::App* app, Options& o, bool need_query) {
  app->add_option("-p,--program", o.program, "program file (.hkb)")->required();
  app->add_option("-e,--edb", o.edb, "EDB fact file(s)");
  app->add_option("--csv", o.csv, "pred=path CSV relation(s)");
  if (need_query) app->add_option("-q,--query", o.query, "query text or query file")->required();
}

void add_net_flags(CLI::App* app, Options& o) {
  app->add_flag("--tre", o.tre, "tail recursion elimination (all tail-recursive predicates unless --tre-pred)");
  app->add_option("--tre-pred", o.tre_preds, "predicates with T(p)=true")->delimiter(',');
  app->add_option("--memorize", o.memorize, "extensional filters memorize")
      ->check(CLI::IsMember({"all", "none"}));
}

void add_engine_flags(CLI::App* app, Options& o) {
  add_net_flags(app, o);
  app->add_option("-l,--depth-bound", o.depth, "term-depth bound l");
  app->add_option("--strategy", o.strategy, "fifo | depth-first | disk-min")
      ->check(CLI::IsMember({"fifo", "depth-first", "disk-min"}));
  app->add_flag("--deepen", o.deepen, "iterative deepening from l");
  app->add_option("--max-answers", o.max_answers, "stop after k answers");
  app->add_option("--time-limit", o.time_limit, "milliseconds");
  app->add_flag("--stats", o.stats, "print counters");
  app->add_flag("--json", o.json_out, "machine-readable output");
  app->add_option("--dot", o.dot, "write the net structure to this file");
  app->add_flag("--trace", o.trace, "one line per fire on stderr");
  app->add_flag("--ground", o.ground, "enumerate ground answers over the EDB constants");
  app->add_option("--page-capacity", o.page_capacity, "tuples per simulated page");
  app->add_option("--memory-pages", o.memory_pages, "resident page budget");
  app->add_flag("--check-invariants", o.check, "scan the net after every fire");
}

void load_into(KnowledgeBase& kb, const Options& o) {
  parse_program(kb, read_file(o.program));
  for (const auto& e : o.edb) parse_edb(kb, read_file(e));
  for (const auto& spec : o.csv) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw UsageError("--csv expects pred=path");
    load_csv(kb, spec.substr(0, eq), read_file(spec.substr(eq + 1)));
  }
}

std::string query_text(const std::string& q) {
  std::ifstream in(q);
  if (in && q.find("?-") == std::string::npos) {
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return q;
}

EngineConfig make_config(const KnowledgeBase& kb, const Options& o) {
  EngineConfig c;
  c.depth_bound = o.depth;
  c.strategy = parse_strategy(o.strategy);
  c.net.tre = o.tre;
  c.net.memorize = o.memorize == "all";
  for (const auto& name : o.tre_preds) {
    auto p = kb.program.find(name);
    if (!p) throw UsageError("--tre-pred: unknown predicate " + name);
    c.net.tre_preds.insert(*p);
  }
  // --tre alone: T(p)=true for every predicate with a tail-recursive clause
  if (o.tre && o.tre_preds.empty())
    for (const Clause& cl : kb.program.clauses())
      if (!cl.body.empty() && cl.body.back().pred == cl.head.pred) c.net.tre_preds.insert(cl.head.pred);
  if (o.max_answers) c.max_answers = o.max_answers;
  if (o.time_limit) c.time_limit = std::chrono::milliseconds(o.time_limit);
  c.deepen = o.deepen;
  c.page_capacity = o.page_capacity;
  c.memory_pages = o.memory_pages;
  c.check_invariants = o.check;
  if (o.trace) c.trace = &std::cerr;
  return c;
}

std::vector<TermId> goal_constants(const TermStore& st, const Atom& goal) {
  std::vector<TermId> out;
  for (TermId t : goal.args)
    if (!st.is_variable(t) && st.arity(t) == 0) out.push_back(t);
  return out;
}

std::string bindings(const TermStore& st, const NormalizedQuery& q, const Tuple& ans) {
  if (q.vars.empty()) return "true";
  std::string out;
  for (TermId v : q.vars) {
    std::size_t k = std::find(q.goal.args.begin(), q.goal.args.end(), v) - q.goal.args.begin();
    if (!out.empty()) out += ", ";
    out += st.to_string(v) + " = " + (k < ans.size() ? st.to_string(ans[k]) : "?");
  }
  return out;
}

json tuple_json(const TermStore& st, const Tuple& t) {
  json a = json::array();
  for (TermId x : t) a.push_back(st.to_string(x));
  return a;
}

json stats_json(const Engine& e) {
  const EngineStats& s = e.stats();
  const NetStructure& net = e.net();
  json j;
  j["fires"] = s.total_fires;
  j["edb_reads"] = s.edb_reads;
  j["unifications"] = s.unifications;
  j["depth_rejections"] = s.depth_rejections;
  j["subqueries_inserted"] = s.subqueries_inserted;
  j["reinsertions"] = s.reinsertions;
  j["multi_consumptions"] = s.multi_consumptions;
  j["page_loads"] = e.storage().loads();
  j["page_unloads"] = e.storage().unloads();
  json units = json::array();
  for (UnitId u = 0; u < e.storage().unit_count(); ++u)
    units.push_back({{"unit", e.storage().unit_name(u)},
                     {"loads", e.storage().loads(u)},
                     {"unloads", e.storage().unloads(u)}});
  j["units"] = units;
  json edges = json::array();
  for (EdgeId k = 0; k < net.edges().size(); ++k)
    edges.push_back({{"from", net.node(net.edge(k).from).name},
                     {"to", net.node(net.edge(k).to).name},
                     {"fires", s.fires[k]},
                     {"transfers", s.transfers[k]}});
  j["edges"] = edges;
  json nodes = json::array();
  for (NodeId v = 0; v < net.nodes().size(); ++v)
    nodes.push_back({{"node", net.node(v).name}, {"added", s.added[v]}, {"rejected", s.rejected[v]}});
  j["nodes"] = nodes;
  return j;
}

void print_stats(const Engine& e, std::ostream& out) {
  const EngineStats& s = e.stats();
  out << "# fires " << s.total_fires << "\n# edb_reads " << s.edb_reads << "\n# unifications "
      << s.unifications << "\n# depth_rejections " << s.depth_rejections << "\n# page_loads "
      << e.storage().loads() << "\n# page_unloads " << e.storage().unloads() << "\n";
  for (UnitId u = 0; u < e.storage().unit_count(); ++u)
    if (e.storage().loads(u) || e.storage().unloads(u))
      out << "# unit " << e.storage().unit_name(u) << " loads=" << e.storage().loads(u)
          << " unloads=" << e.storage().unloads(u) << "\n";
  const NetStructure& net = e.net();
  for (EdgeId k = 0; k < net.edges().size(); ++k)
    if (s.fires[k])
      out << "# edge " << net.node(net.edge(k).from).name << " -> " << net.node(net.edge(k).to).name
          << " fires=" << s.fires[k] << "\n";
}

int cmd_run(const Options& o) {
  KnowledgeBase kb;
  load_into(kb, o);
  NormalizedQuery q = normalize_query(kb, parse_query(kb, query_text(o.query)));
  EngineConfig cfg = make_config(kb, o);
  auto t0 = std::chrono::steady_clock::now();
  Engine engine(kb, q.goal, cfg);
  if (!o.dot.empty()) {
    std::ofstream out(o.dot);
    out << to_dot(kb.terms(), kb.program, engine.net());
  }
  RunResult r = engine.run();
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  TermStore& st = kb.terms();

  std::vector<Tuple> ground;
  if (o.ground) {
    auto universe = herbrand_constants(kb, goal_constants(st, q.goal));
    auto g = ground_instances(st, r.answers, universe);
    ground.assign(g.begin(), g.end());
  }

  if (o.json_out) {
    json j;
    j["schema"] = "qsqn-run/1";
    j["config"] = {{"depth_bound", o.depth},   {"strategy", strategy_name(cfg.strategy)}, {"tre", cfg.net.tre},
                   {"memorize", o.memorize},   {"deepen", o.deepen},     {"max_answers", o.max_answers},
                   {"time_limit_ms", o.time_limit}, {"page_capacity", o.page_capacity},
                   {"memory_pages", o.memory_pages}};
    j["goal"] = to_string(st, kb.program, q.goal);
    json ans = json::array();
    for (const Tuple& t : r.answers) ans.push_back(tuple_json(st, t));
    j["answers"] = ans;
    if (o.ground) {
      json g = json::array();
      for (const Tuple& t : ground) g.push_back(tuple_json(st, t));
      j["ground"] = g;
    }
    j["partial"] = r.partial;
    j["depth"] = r.depth;
    json rounds = json::array();
    for (const Round& rd : r.rounds)
      rounds.push_back({{"depth", rd.depth}, {"ans_before", rd.ans_before}, {"ans_after", rd.ans_after},
                        {"fires", rd.fires}, {"carried", rd.carried}});
    j["rounds"] = rounds;
    j["stats"] = stats_json(engine);
    j["time_ms"] = ms;
    std::cout << j.dump(2) << "\n";
  } else {
    if (r.answers.empty()) std::cout << "no\n";
    const auto& shown = o.ground ? ground : r.answers;
    for (const Tuple& t : shown) std::cout << bindings(st, q, t) << "\n";
    if (r.partial) std::cout << "% time limit reached, answers are partial\n";
    if (o.stats) {
      std::cout << "# depth " << r.depth << "\n# time_ms " << ms << "\n";
      print_stats(engine, std::cout);
    }
  }
  return r.partial ? partial : ok;
}

int cmd_dot(const Options& o) {
  KnowledgeBase kb;
  load_into(kb, o);
  EngineConfig cfg = make_config(kb, o);
  std::cout << to_dot(kb.terms(), kb.program, build_structure(kb.terms(), kb.program, cfg.net));
  return ok;
}

// Harness sanity: a corrupted answer list must make the check fail.
void inject_fault(TermStore& st, const std::string& fault, std::vector<Tuple>& answers, std::size_t arity) {
  if (fault == "drop-answer" && !answers.empty()) answers.erase(answers.begin());
  if (fault == "bogus-answer") answers.push_back(Tuple(arity, st.make("$bogus", {})));
}

int cmd_oracle_check(const Options& o, std::uint64_t budget, const std::string& fault) {
  KnowledgeBase kb;
  load_into(kb, o);
  NormalizedQuery q = normalize_query(kb, parse_query(kb, query_text(o.query)));
  TermStore& st = kb.terms();
  Engine engine(kb, q.goal, make_config(kb, o));
  RunResult r = engine.run();
  inject_fault(st, fault, r.answers, q.goal.args.size());
  for (const Tuple& t : r.answers) {
    std::vector<TermId> vs = variables_of(st, t);
    for (TermId v : vs)
      if (st.var_space(v) == VarSpace::oracle) throw std::logic_error("oracle variable in engine data");
  }

  std::vector<std::string> only_engine, only_oracle, unsure;
  bool function_free = !has_function_symbols(st, kb.program, kb.edb);
  bool ground_edb = true;
  for (PredId p : kb.edb.predicates())
    kb.edb.relation(p)->for_each([&](Slot, TupleView t) { ground_edb = ground_edb && is_ground(st, t); });

  std::string method;
  if (function_free && ground_edb) {
    method = "fixpoint";
    auto extra = goal_constants(st, q.goal);
    Model m = tp_fixpoint(kb, extra);
    std::set<Tuple> want = model_answers(st, m, q.goal);
    std::set<Tuple> got = ground_instances(st, r.answers, herbrand_constants(kb, extra));
    for (const Tuple& t : got)
      if (!want.count(t)) only_engine.push_back(st.to_string(t));
    for (const Tuple& t : want)
      if (!got.count(t)) only_oracle.push_back(st.to_string(t));
  } else {
    method = "sld";
    SldOptions so;
    so.depth_bound = o.depth;
    so.step_budget = budget;
    SldResult s = sld_answers(kb, q.goal, so);
    if (s.truncated) unsure.push_back("oracle search hit the step budget");
    for (const Tuple& t : s.answers)
      if (!instance_of_any(st, t, r.answers)) only_oracle.push_back(st.to_string(t));
    for (const Tuple& t : r.answers) {
      Verdict v = verify_answer(kb, q.goal, t, nullptr, so);
      if (v == Verdict::incorrect) only_engine.push_back(st.to_string(t));
      if (v == Verdict::inconclusive) unsure.push_back("cannot verify " + st.to_string(t));
    }
  }
  bool clean = only_engine.empty() && only_oracle.empty() && unsure.empty() && !r.partial;
  if (o.json_out) {
    json j{{"schema", "qsqn-oracle-check/1"},
           {"method", method},
           {"engine_answers", r.answers.size()},
           {"only_in_engine", only_engine},
           {"only_in_oracle", only_oracle},
           {"inconclusive", unsure},
           {"agree", clean}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "method " << method << "\nengine answers " << r.answers.size() << "\n";
    std::cout << "only in engine (unsound) " << only_engine.size() << "\n";
    for (auto& s : only_engine) std::cout << "  " << s << "\n";
    std::cout << "only in oracle (incomplete) " << only_oracle.size() << "\n";
    for (auto& s : only_oracle) std::cout << "  " << s << "\n";
    for (auto& s : unsure) std::cout << "inconclusive: " << s << "\n";
    std::cout << (clean ? "agree\n" : "DIFFER\n");
  }
  return clean ? ok : discrepancy;
}

struct BenchOptions {
  std::string workload = "example1";
  std::size_t n = 10, m = 10;
  std::vector<std::size_t> sizes{100, 200, 400};
  std::vector<std::string> strategies{"fifo", "depth-first"};
  std::size_t max_answers = 0;
  bool json_out = false;
  std::size_t page_capacity = 64, memory_pages = 8;
};

int cmd_bench(const BenchOptions& b) {
  std::vector<std::pair<std::string, Workload>> jobs;
  if (b.workload == "example1")
    jobs.emplace_back("example1 n=" + std::to_string(b.n) + " m=" + std::to_string(b.m),
                      example1_workload(b.n, b.m));
  else if (b.workload == "chain")
    for (std::size_t s : b.sizes) jobs.emplace_back("chain n=" + std::to_string(s), chain_workload(s));
  else
    throw UsageError("unknown workload " + b.workload);

  json rows = json::array();
  if (!b.json_out)
    std::cout << "workload\tstrategy\tanswers\tfires\tedb_reads\tpage_loads\tpage_unloads\tms\n";
  for (auto& [name, w] : jobs) {
    std::optional<std::vector<std::string>> first;
    bool equal = true;
    // engines only read the KB, so one parse serves every strategy
    KnowledgeBase kb;
    parse_program(kb, w.program);
    parse_edb(kb, w.edb);
    NormalizedQuery q = normalize_query(kb, parse_query(kb, w.query));
    for (const auto& sname : b.strategies) {
      EngineConfig c;
      c.strategy = parse_strategy(sname);
      if (b.max_answers) c.max_answers = b.max_answers;
      c.page_capacity = b.page_capacity;
      c.memory_pages = b.memory_pages;
      auto t0 = std::chrono::steady_clock::now();
      Engine e(kb, q.goal, c);
      RunResult r = e.run();
      double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      std::vector<std::string> got;
      for (const Tuple& t : r.answers) got.push_back(kb.terms().to_string(t));
      std::sort(got.begin(), got.end());
      if (!first) first = got;
      equal = equal && got == *first;
      json row{{"workload", name},
               {"strategy", sname},
               {"answers", r.answers.size()},
               {"fires", e.stats().total_fires},
               {"edb_reads", e.stats().edb_reads},
               {"page_loads", e.storage().loads()},
               {"page_unloads", e.storage().unloads()},
               {"ms", ms}};
      rows.push_back(row);
      if (!b.json_out)
        std::cout << name << "\t" << sname << "\t" << r.answers.size() << "\t" << e.stats().total_fires
                  << "\t" << e.stats().edb_reads << "\t" << e.storage().loads() << "\t"
                  << e.storage().unloads() << "\t" << ms << "\n";
    }
    if (!b.json_out) std::cout << name << "\tanswers_equal\t" << (equal ? "true" : "false") << "\n";
    rows.push_back({{"workload", name}, {"answers_equal", equal}});
  }
  if (b.json_out) std::cout << json{{"schema", "qsqn-bench/1"}, {"rows", rows}}.dump(2) << "\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QSQ-net evaluation of Horn knowledge bases"};
  app.require_subcommand(1);
  Options o;
  BenchOptions b;
  std::uint64_t budget = 100000;

  auto* run = app.add_subcommand("run", "evaluate a query");
  add_input_flags(run, o, true);
  add_engine_flags(run, o);

  auto* dot = app.add_subcommand("dot", "print the net structure as DOT");
  add_input_flags(dot, o, false);
  add_net_flags(dot, o);

  auto* check = app.add_subcommand("oracle-check", "compare engine answers with the reference oracle");
  add_input_flags(check, o, true);
  add_engine_flags(check, o);
  check->add_option("--step-budget", budget, "SLD resolution steps");
  std::string fault;
  check->add_option("--inject-fault", fault)
      ->check(CLI::IsMember({"drop-answer", "bogus-answer"}))
      ->group("");

  auto* bench = app.add_subcommand("bench", "compare strategies on a generated workload");
  bench->add_option("--workload", b.workload, "example1 | chain")
      ->check(CLI::IsMember({"example1", "chain"}));
  bench->add_option("--n", b.n, "example1 chain length");
  bench->add_option("--m", b.m, "example1 branch count");
  bench->add_option("--sizes", b.sizes, "chain sizes")->delimiter(',');
  bench->add_option("--strategies", b.strategies, "strategies to compare")->delimiter(',');
  bench->add_option("--max-answers", b.max_answers, "stop after k answers");
  bench->add_option("--page-capacity", b.page_capacity);
  bench->add_option("--memory-pages", b.memory_pages);
  bench->add_flag("--json", b.json_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  try {
    if (*run) return cmd_run(o);
    if (*dot) return cmd_dot(o);
    if (*check) return cmd_oracle_check(o, budget, fault);
    if (*bench) return cmd_bench(b);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return parse_failure;
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return usage;
  }
  return usage;
}
