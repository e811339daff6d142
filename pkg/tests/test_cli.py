import csv
import io
import json
import re
from collections import Counter

import pytest
from click.testing import CliRunner

from fixed_point_forest import __version__, brute_farthest_leaf, brute_nearest_leaf
from fixed_point_forest.cli import EXIT_BUDGET, EXIT_CHECK, EXIT_CONFIG, main
from conftest import all_perms


@pytest.fixture
def run():
    runner = CliRunner()

    def invoke(*args, env=None):
        return runner.invoke(main, list(args), env=env or {"FPF_SEED": ""})
    return invoke


def as_json(result):
    assert result.exit_code == 0, result.output + str(result.exception)
    return json.loads(result.stdout)


class TestForest:
    def test_dot_three(self, run):
        out = run("forest", "--n", "3", "--format", "dot").stdout
        nodes = dict(re.findall(r'(v\d+) \[label="([^"]+)"\]', out))
        edges = {(nodes[a], nodes[b]) for a, b in re.findall(r"(v\d+) -> (v\d+)", out)}
        assert edges == {("312", "123"), ("213", "123"), ("321", "213"), ("231", "321")}

    def test_json_summary(self, run):
        rep = as_json(run("forest", "--n", "4", "--verify"))
        assert rep["summary"] == {"vertices": 24, "bases": 6, "leaves": 11, "edges": 18,
                                  "acyclic": True}
        assert rep["version"] == __version__

    def test_csv(self, run):
        rows = list(csv.reader(io.StringIO(run("forest", "--n", "3", "--format", "csv").stdout)))
        assert len(rows) == 7

    def test_ball(self, run):
        rep = as_json(run("forest", "--perm", "1234", "--r", "1"))
        assert rep["vertices"] == 4
        assert {c for c, p in rep["edges"]} == {"2134", "3124", "4123"}

    def test_errors(self, run):
        assert run("forest").exit_code == 2
        assert run("forest", "--n", "10").exit_code == EXIT_CONFIG
        assert run("forest", "--perm", "1 1 2").exit_code == EXIT_CONFIG


class TestPaths:
    def test_example(self, run):
        rep = as_json(run("paths", "--perm", "3 2 4 1 5", "--full-paths"))
        assert rep["ell"] == 9 and rep["M"] == 3 and rep["B"] == [2, 3, 4, 5]
        assert rep["lub_bound"] == 15
        assert rep["separation_word"] == [2, 0, 1, -3, 0]
        assert rep["shortest_path"] == ["32415", "53241", "45321", "34521"]
        assert len(rep["longest_path"]) == 10
        assert rep["config"]["perm"] == "32415"

    def test_budget_exit(self, run):
        res = run("paths", "--perm", " ".join(map(str, range(1, 21))), "--budget-steps", "10")
        assert res.exit_code == EXIT_BUDGET

    def test_bad_x(self, run):
        assert run("paths", "--perm", "21", "--x", "0").exit_code == EXIT_CONFIG


class TestMc:
    def test_exhaustive_matches_oracle(self, run):
        rep = as_json(run("mc", "--n", "5", "--exhaustive", "--statistic", "M",
                          "--statistic", "L", "--seed", "1"))
        oracle = {"M": Counter(brute_nearest_leaf(p) for p in all_perms(5)),
                  "L": Counter(brute_farthest_leaf(p) for p in all_perms(5))}
        for r in rep["reports"]:
            want = {v: c / 120 for v, c in oracle[r["statistic"]].items()}
            assert {v: p for v, p in r["pmf"]} == pytest.approx(want, abs=1e-15)
        assert rep["config"]["seed"] == 1

    def test_determinism(self, run):
        a = run("mc", "--n", "50", "--trials", "2000", "--seed", "7")
        b = run("mc", "--n", "50", "--trials", "2000", "--seed", "7")
        assert a.exit_code == 0 and a.stdout == b.stdout
        c = run("mc", "--n", "50", "--trials", "2000", "--seed", "7", "--format", "csv")
        d = run("mc", "--n", "50", "--trials", "2000", "--seed", "7", "--format", "csv")
        assert c.stdout == d.stdout and c.stdout.startswith("statistic,value,probability")

    def test_seed_echo_and_env(self, run):
        res = run("mc", "--n", "10", "--trials", "10", "--statistic", "M")
        seed = int(re.search(r"seed: (\d+)", res.stderr).group(1))
        assert json.loads(res.stdout)["config"]["seed"] == seed
        env = run("mc", "--n", "10", "--trials", "10", "--statistic", "M", env={"FPF_SEED": "5"})
        assert json.loads(env.stdout)["config"]["seed"] == 5


class TestLimit:
    @pytest.mark.parametrize("stat", ["nearest", "farthest", "scan", "yule"])
    def test_walks(self, run, stat):
        rep = as_json(run("limit", "--statistic", stat, "--samples", "20000", "--seed", "3",
                          "--tol", "0.02"))
        cmp_ = rep["reports"][0]["comparisons"][0]
        assert cmp_["pass"] is True

    def test_ball(self, run):
        rep = as_json(run("limit", "--statistic", "ball", "--r", "0", "--trials", "50",
                          "--seed", "1"))
        assert rep["histogram"] == [["()", 1.0]]


class TestCompareTvVerify:
    def test_compare(self, run):
        rep = as_json(run("compare", "--n", "300", "--r", "1", "--trials", "3000",
                          "--seed", "2", "--tol", "0.06"))
        assert rep["comparisons"][0]["pass"] is True

    def test_compare_failure_exit(self, run):
        res = run("compare", "--n", "300", "--r", "2", "--trials", "200", "--seed", "2",
                  "--tol", "0.0")
        assert res.exit_code == EXIT_CHECK

    def test_tv(self, run):
        rep = as_json(run("tv", "--n", "6", "--r", "1"))
        assert rep["exact_tv"] == pytest.approx(0.13027025787394406, abs=1e-14)
        assert rep["bound"] == pytest.approx(4.5)
        assert run("tv", "--n", "12", "--r", "1").exit_code == EXIT_BUDGET

    def test_verify_subset(self, run, tmp_path):
        path = tmp_path / "v.json"
        res = run("verify", "--scale", "quick", "--criterion", "1", "--criterion", "3",
                  "--out", str(path))
        assert res.exit_code == 0
        assert "[PASS] criterion 1" in res.stderr
        rep = json.loads(path.read_text())
        assert [c["criterion"] for c in rep["checks"]] == [1, 3] and rep["passed"]
