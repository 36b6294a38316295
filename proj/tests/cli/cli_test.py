"""End-to-end checks of the qsqn binary: answers, exit codes, DOT, JSON schemas."""
import json
import os
import subprocess
import sys
import tempfile
import unittest

import jsonschema

QSQN = os.environ.get("QSQN_BIN", "qsqn")
ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
DATA = os.path.join(ROOT, "tests", "data")
GOLDEN = os.path.join(ROOT, "tests", "golden")
SCHEMAS = os.path.join(ROOT, "schemas")


def data(name):
    return os.path.join(DATA, name)


def qsqn(*args):
    return subprocess.run([QSQN, *args], capture_output=True, text=True, timeout=120)


def schema(name):
    with open(os.path.join(SCHEMAS, name)) as f:
        return json.load(f)


EX2 = ["-p", data("example2.hkb"), "-e", data("example2.facts")]


class Run(unittest.TestCase):
    def test_example2_answers(self):
        r = qsqn("run", *EX2, "-q", data("example2.query"))
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(r.stdout.splitlines(), ["Y = b", "Y = c"])

    def test_query_text_and_csv(self):
        r = qsqn("run", "-p", data("example2.hkb"), "--csv", "q=" + data("q.csv"), "-q", "?- p(X,c).")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(sorted(r.stdout.splitlines()), ["X = a", "X = b"])

    def test_no_answers(self):
        r = qsqn("run", *EX2, "-q", "?- p(c,Y).")
        self.assertEqual((r.returncode, r.stdout), (0, "no\n"))

    def test_every_strategy_and_tre_agree(self):
        outs = set()
        for extra in (["--strategy", "fifo"], ["--strategy", "depth-first"], ["--strategy", "disk-min"],
                      ["--tre"], ["--tre-pred", "p", "--strategy", "depth-first"], ["--memorize", "none"]):
            r = qsqn("run", *EX2, "-q", "?- p(X,Y).", *extra)
            self.assertEqual(r.returncode, 0, r.stderr)
            outs.add(tuple(sorted(r.stdout.splitlines())))
        self.assertEqual(outs, {("X = a, Y = b", "X = a, Y = c", "X = b, Y = c")})

    def test_deepen_finds_first_three_numerals(self):
        r = qsqn("run", "-p", data("nat.hkb"), "-q", "?- nat(N).", "--deepen", "--max-answers", "3")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(r.stdout.splitlines(), ["N = z", "N = s(z)", "N = s(s(z))"])

    def test_depth_bound_cuts_answers(self):
        r = qsqn("run", "-p", data("append.hkb"), "-q", "?- app(X,Y,c(a,c(b,nil))).", "-l", "1")
        self.assertEqual(r.stdout, "no\n")
        r = qsqn("run", "-p", data("append.hkb"), "-q", "?- app(X,Y,c(a,c(b,nil))).", "-l", "2")
        self.assertEqual(len(r.stdout.splitlines()), 3)

    def test_ground_enumeration(self):
        r = qsqn("run", "-p", data("example2.hkb"), "-e", data("example2.facts"), "-q", "?- p(X,Y).",
                 "--ground", "--json")
        self.assertEqual(json.loads(r.stdout)["ground"], [["a", "b"], ["a", "c"], ["b", "c"]])

    def test_trace_goes_to_stderr(self):
        r = qsqn("run", *EX2, "-q", "?- p(a,Y).", "--trace")
        self.assertTrue(r.stderr.startswith("fire input_p -> pre_filter_1"), r.stderr[:200])
        self.assertEqual(r.stdout.splitlines(), ["Y = b", "Y = c"])

    def test_time_limit_marks_partial(self):
        with tempfile.NamedTemporaryFile("w", suffix=".facts", delete=False) as f:
            for i in range(3000):
                f.write(f"q(c{i},c{i + 1}).\n")
        try:
            r = qsqn("run", "-p", data("example2.hkb"), "-e", f.name, "-q", "?- p(X,Y).",
                     "--time-limit", "1", "--json")
        finally:
            os.unlink(f.name)
        self.assertEqual(r.returncode, 3, r.stderr)
        out = json.loads(r.stdout)
        self.assertTrue(out["partial"])
        jsonschema.validate(out, schema("qsqn-run.schema.json"))

    def test_deterministic(self):
        args = ("run", *EX2, "-q", "?- p(X,Y).", "--strategy", "disk-min", "--stats")
        strip = lambda s: [l for l in s.splitlines() if not l.startswith("# time_ms")]
        self.assertEqual(strip(qsqn(*args).stdout), strip(qsqn(*args).stdout))

    def test_dot_side_output(self):
        with tempfile.TemporaryDirectory() as d:
            out = os.path.join(d, "net.dot")
            r = qsqn("run", *EX2, "-q", "?- p(a,Y).", "--dot", out)
            self.assertEqual(r.returncode, 0)
            with open(out) as f, open(os.path.join(GOLDEN, "example2.dot")) as g:
                self.assertEqual(f.read(), g.read())


class ExitCodes(unittest.TestCase):
    def test_parse_error(self):
        r = qsqn("run", "-p", data("broken.hkb"), "-q", "?- p(X).")
        self.assertEqual(r.returncode, 2)
        self.assertIn("1:5", r.stderr)

    def test_usage_errors(self):
        self.assertEqual(qsqn("run", "-q", "?- p(X).").returncode, 1)
        self.assertEqual(qsqn("run", *EX2, "-q", "?- p(a,Y).", "--strategy", "random").returncode, 1)
        self.assertEqual(qsqn("run", *EX2, "-q", "?- p(a,Y).", "--tre-pred", "nope").returncode, 1)


class Dot(unittest.TestCase):
    def test_golden(self):
        for extra, golden in (([], "example2.dot"), (["--tre", "--tre-pred", "p"], "example2_tre.dot")):
            r = qsqn("dot", "-p", data("example2.hkb"), *extra)
            with open(os.path.join(GOLDEN, golden)) as g:
                self.assertEqual(r.stdout, g.read(), golden)


class OracleCheck(unittest.TestCase):
    def test_function_free_agrees(self):
        r = qsqn("oracle-check", *EX2, "-q", "?- p(X,Y).", "--json")
        self.assertEqual(r.returncode, 0, r.stdout)
        out = json.loads(r.stdout)
        jsonschema.validate(out, schema("qsqn-oracle-check.schema.json"))
        self.assertEqual((out["method"], out["agree"]), ("fixpoint", True))

    def test_functional_at_l2_agrees(self):
        r = qsqn("oracle-check", "-p", data("append.hkb"), "-q", "?- app(X,Y,c(a,c(b,nil))).", "-l", "2")
        self.assertEqual(r.returncode, 0, r.stdout)
        self.assertIn("method sld", r.stdout)
        self.assertTrue(r.stdout.endswith("agree\n"))

    def test_corrupted_answers_are_caught(self):
        for fault, field in (("drop-answer", "only_in_oracle"), ("bogus-answer", "only_in_engine")):
            for prog in (EX2 + ["-q", "?- p(X,Y)."],
                         ["-p", data("append.hkb"), "-q", "?- app(X,Y,c(a,nil)).", "-l", "2"]):
                r = qsqn("oracle-check", *prog, "--inject-fault", fault, "--json")
                self.assertEqual(r.returncode, 4, (fault, r.stdout))
                self.assertTrue(json.loads(r.stdout)[field], (fault, r.stdout))


class Json(unittest.TestCase):
    def test_run_schema(self):
        for extra in ([], ["--deepen", "--max-answers", "2", "--strategy", "depth-first"], ["--tre", "--ground"]):
            r = qsqn("run", *EX2, "-q", "?- p(X,Y).", "--json", *extra)
            out = json.loads(r.stdout)
            jsonschema.validate(out, schema("qsqn-run.schema.json"))
        self.assertEqual(out["config"]["strategy"], "fifo")

    def test_stats_report_units_and_edges(self):
        r = qsqn("run", *EX2, "-q", "?- p(a,Y).", "--json")
        stats = json.loads(r.stdout)["stats"]
        self.assertIn("edb:q", [u["unit"] for u in stats["units"]])
        self.assertEqual(len(stats["edges"]), 11)
        self.assertEqual(sum(e["fires"] for e in stats["edges"]), stats["fires"])

    def test_bench_schema(self):
        r = qsqn("bench", "--workload", "example1", "--n", "4", "--m", "3", "--max-answers", "1",
                 "--strategies", "fifo,depth-first,disk-min", "--json")
        self.assertEqual(r.returncode, 0, r.stderr)
        out = json.loads(r.stdout)
        jsonschema.validate(out, schema("qsqn-bench.schema.json"))
        self.assertTrue(out["rows"][-1]["answers_equal"])
        r = qsqn("bench", "--workload", "chain", "--sizes", "5,10", "--json")
        jsonschema.validate(json.loads(r.stdout), schema("qsqn-bench.schema.json"))


if __name__ == "__main__":
    if len(sys.argv) > 1 and not sys.argv[1].startswith("-"):
        QSQN = sys.argv.pop(1)
    unittest.main()
