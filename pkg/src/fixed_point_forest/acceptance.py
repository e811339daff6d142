"""The acceptance checks, shared by ``fpf verify`` and the test suite.

Every check returns a ``Check`` whose ``details`` hold only values that
are reproducible from the seed, so a report can be compared byte for
byte across runs.  At ``scale="quick"`` the Monte Carlo checks use
``QUICK_FACTOR`` times fewer samples and widen their tolerances by the
square root of that factor.
"""
from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from .forest import brute_farthest_leaf, brute_nearest_leaf, build_forest
from .limit import (PointProcessFamily, backward_map, build_r_ball_limit, forward_map,
                    sample_limit_statistic, sample_ppp, sample_window)
from .paths import (bumped_set, longest_length, longest_path, lub_bound, shortest_length,
                    shortest_path, simple_upper_bound)
from .permutation import Permutation, children, one_line, parse_permutation
from .stats import (EmpiricalDistribution, GeometricLaw, PoissonLaw, bx_tail_table,
                    identity_tree_probe, indicator_tv_experiment, mc_forest_stats,
                    rball_histogram_compare, tail_decay_check, tv_distance)

DEFAULT_SEED = 20240601
QUICK_FACTOR = 100

# child -> parent edges read off the reference drawings of F_3 and F_4
FOREST_3_EDGES = {("312", "123"), ("213", "123"), ("321", "213"), ("231", "321")}
FOREST_4_EDGES = {
    ("4312", "3124"), ("2143", "1243"), ("2413", "4213"), ("2341", "3241"),
    ("4123", "1234"), ("3421", "4231"), ("2134", "1234"), ("2431", "4231"),
    ("3124", "1234"), ("4321", "3214"), ("4213", "2134"), ("3241", "2431"),
    ("3214", "2134"), ("4132", "1324"), ("2314", "3214"), ("3142", "1432"),
    ("3412", "4132"), ("4231", "2314"),
}
GEO = GeometricLaw(math.exp(-1.0))
POI = PoissonLaw(1.0)


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {"criterion": self.criterion, "name": self.name, "pass": self.passed,
                "details": self.details}


def _rng(seed: int, criterion: int, part: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, criterion, part])


def _size(full: int, scale: str) -> int:
    return full if scale == "full" else max(1, full // QUICK_FACTOR)


def _widen(tol: float, scale: str) -> float:
    return tol if scale == "full" else tol * math.sqrt(QUICK_FACTOR)


def _edges(n: int) -> set[tuple[str, str]]:
    f = build_forest(n)
    return {(one_line(f.vertex(c)), one_line(f.vertex(p))) for c, p in f.edges()}


def criterion_1(seed: int, scale: str) -> Check:
    e3 = _edges(3)
    e4 = _edges(4)
    ok = e3 == FOREST_3_EDGES and FOREST_4_EDGES <= e4 and len(e4) == 18
    return Check(1, "figure reproduction", ok,
                 {"F3_edges": len(e3), "F4_edges": len(e4),
                  "F4_reference_edges_found": len(FOREST_4_EDGES & e4)})


def derangements(n: int) -> int:
    return sum((-1) ** k * math.comb(n, k) * math.factorial(n - k) for k in range(n + 1))


def leaf_count(n: int) -> int:
    """Permutations with no fixed point among positions 2..n."""
    return sum((-1) ** k * math.comb(n - 1, k) * math.factorial(n - k) for k in range(n))


def criterion_2(seed: int, scale: str) -> Check:
    rows = {}
    ok = True
    for n in range(1, 8):
        f = build_forest(n)
        leaves = f.leaves()
        front = f.perms[leaves, 0]
        row = {"vertices": len(f), "bases": len(f.bases()), "leaves": len(leaves),
               "leaves_moving_front": int((front != 1).sum()), "acyclic": f.is_acyclic()}
        ok &= (row["vertices"] == math.factorial(n)
               and row["bases"] == math.factorial(n - 1)
               and row["leaves"] == leaf_count(n)
               and row["leaves_moving_front"] == derangements(n)
               and row["acyclic"])
        rows[str(n)] = row
    return Check(2, "forest counts", ok, rows)


def criterion_3(seed: int, scale: str) -> Check:
    p = parse_permutation("32415")
    short = [one_line(v) for v in shortest_path(p).vertices]
    long_ = [one_line(v) for v in longest_path(p).vertices]
    kids = sorted(one_line(c) for c in children(parse_permutation("42135")))
    b = list(bumped_set(p).values)
    lub = lub_bound(p, exact=True)
    ok = (short == ["32415", "53241", "45321", "34521"]
          and long_ == ["32415", "23415", "52341", "25341", "32541", "23541",
                        "42351", "24351", "32451", "23451"]
          and b == [2, 3, 4, 5] and lub == 15 and kids == ["24135", "54213"])
    return Check(3, "worked example", ok,
                 {"shortest": short, "longest": long_, "B": b, "lub_bound": str(lub),
                  "children_42135": kids})


def criterion_4(seed: int, scale: str) -> Check:
    top = 20 if scale == "full" else 12
    rows = {}
    ok = True
    for n in range(2, top + 1):
        ident = Permutation.identity(n)
        ell = longest_length(ident)
        lub = lub_bound(ident, exact=True)
        rows[str(n)] = [ell, str(lub)]
        ok &= ell == 2 ** (n - 1) - 1 and lub == 2 ** (n - 1) - 1
    return Check(4, "sharp bound on the identity", ok, rows)


def criterion_5(seed: int, scale: str) -> Check:
    n = 6 if scale == "full" else 5
    bad = {"shortest": 0, "longest": 0, "bumped": 0, "bounds": 0}
    for vals in itertools.permutations(range(1, n + 1)):
        p = Permutation(vals)
        path = longest_path(p)
        ell = len(path)
        bad["shortest"] += shortest_length(p) != brute_nearest_leaf(p)
        bad["longest"] += ell != brute_farthest_leaf(p)
        bad["bumped"] += set(path.bumped_values) != set(bumped_set(p).values)
        if len(bumped_set(p)):
            lub = lub_bound(p, exact=True)
            for x in (1, 2, 4):
                bad["bounds"] += not (ell <= lub <= simple_upper_bound(p, x, exact=True))
    return Check(5, f"oracle equivalence on S_{n}", not any(bad.values()),
                 {"n": n, "mismatches": bad})


def criterion_6(seed: int, scale: str) -> Check:
    size = _size(10**6, scale)
    tol = _widen(0.005, scale)
    near = EmpiricalDistribution.from_samples(sample_limit_statistic("nearest", size, _rng(seed, 6, 0)))
    far = EmpiricalDistribution.from_samples(sample_limit_statistic("farthest", size, _rng(seed, 6, 1)))
    scan = EmpiricalDistribution.from_samples(sample_limit_statistic("scan", size, _rng(seed, 6, 2)))
    yule = EmpiricalDistribution.from_samples(sample_limit_statistic("yule", size, _rng(seed, 6, 3), t=1.0))
    tvs = {"nearest_vs_Poi1": tv_distance(near, POI),
           "farthest_vs_Geo": tv_distance(far, GEO),
           "scan_vs_farthest": tv_distance(scan, far),
           "yule_vs_Geo": tv_distance(yule, GEO)}
    return Check(6, "limit samplers", all(v <= tol for v in tvs.values()),
                 {"samples": size, "tolerance": tol, "tv": tvs})


def criterion_7(seed: int, scale: str) -> Check:
    trials = _size(10**5, scale)
    st = mc_forest_stats(1000, trials, _rng(seed, 7), statistics=("M", "L"))
    m, l_ = st.dists["M"], st.dists["L"]
    d = {"trials": trials,
         "mean_M": m.mean(), "tv_M_Poi1": tv_distance(m, POI),
         "mean_L": l_.mean(), "tv_L_Geo": tv_distance(l_, GEO)}
    ok = (abs(d["mean_M"] - 1) <= _widen(0.03, scale)
          and d["tv_M_Poi1"] <= _widen(0.02, scale)
          and abs(d["mean_L"] - (math.e - 1)) <= _widen(0.05, scale)
          and d["tv_L_Geo"] <= _widen(0.02, scale))
    return Check(7, "finite-n limits at n=1000", ok, d)


def criterion_8(seed: int, scale: str) -> Check:
    t1 = _size(10**5, scale)
    t2 = _size(10**4, scale)
    tv1, h1, _ = rball_histogram_compare(2000, 1, t1, _rng(seed, 8, 1))
    tv2, h2, _ = rball_histogram_compare(2000, 2, t2, _rng(seed, 8, 2))
    ok = tv1 <= _widen(0.02, scale) and tv2 <= _widen(0.05, scale)
    return Check(8, "local weak convergence at n=2000", ok,
                 {"r1": {"trials": t1, "tv": tv1, "shapes": len(h1)},
                  "r2": {"trials": t2, "tv": tv2, "shapes": len(h2)}})


def criterion_9(seed: int, scale: str) -> Check:
    rows = {}
    tvs = []
    ok = True
    for n in (6, 7, 8):
        tv, bound = indicator_tv_experiment(n, 1, (1,))
        rows[str(n)] = {"exact_tv": tv, "bound": bound}
        ok &= tv <= min(1.0, 18 / (n - 2))
        tvs.append(tv)
    ok &= tvs[0] > tvs[1] > tvs[2]
    return Check(9, "indicator TV experiment", ok, rows)


def criterion_10(seed: int, scale: str) -> Check:
    trials = _size(10**6, scale)
    st = mc_forest_stats(1000, trials, _rng(seed, 10), x=(2.0,), statistics=("B", "Bx"))
    b = st.dists["B"]
    decay = tail_decay_check(b, 0.8, range(1, 13), 100)
    tail = {str(k): [b.tail(k), b.tail_count(k), 0.8**k] for k in range(1, 13)}
    table = bx_tail_table(st.dists["Bx:2"], 2.0, range(6, 13))
    ok = decay and all(row["pass"] for row in table)
    return Check(10, "tail bounds at n=1000", ok,
                 {"trials": trials, "B_tail": tail, "Bx_table": table})


def criterion_11(seed: int, scale: str) -> Check:
    trials = _size(10**5, scale)
    rows = {}
    ok = True
    for n in (100, 200, 400):
        r = identity_tree_probe(n, trials, _rng(seed, 11, n))
        r["pass"] = (r["n_p_low"] >= 1 - 3 * r["sigma_low"]
                     and r["n_p_high"] <= math.e + 3 * r["sigma_high"])
        ok &= r["pass"]
        rows[str(n)] = r
    return Check(11, "identity tree probe", ok, rows)


def _random_family(rng: np.random.Generator, lo: int, hi: int) -> PointProcessFamily:
    levels = {}
    seen: set[float] = set()
    for k in range(lo, hi + 1):
        pts = sample_ppp(rng)
        while seen.intersection(pts):
            pts = sample_ppp(rng)
        seen.update(pts)
        levels[k] = pts
    return PointProcessFamily(levels)


def round_trip_failures(count: int, rng: np.random.Generator) -> tuple[int, int]:
    """(checked, failed) for backward_map(forward_map(xi, x), x) == xi."""
    checked = failed = 0
    while checked < count:
        fam = _random_family(rng, -3, 3)
        if not fam.atoms:
            continue
        x = fam.atoms[int(rng.integers(len(fam.atoms)))]
        back = backward_map(forward_map(fam, x), x)
        checked += 1
        failed += back.window(-5, 5) != fam.window(-5, 5)
    return checked, failed


def window_mutation_failures(count: int, r: int, rng: np.random.Generator) -> int:
    """Balls whose shape changes when levels outside -r+1..r-1 are replaced."""
    failed = 0
    for _ in range(count):
        fam, us = sample_window(r, rng)
        base = build_r_ball_limit(us, fam, r)
        inside = fam.window(-r + 1, r - 1)
        used = {p for pts in inside.values() for p in pts} | set(us)
        extra = {}
        for k in list(range(-r - 3, -r + 1)) + list(range(r, r + 4)):
            pts = tuple(sorted({v for v in rng.random(int(rng.integers(0, 6))).tolist() if v > 0} - used))
            extra[k] = pts
            used |= set(pts)
        mutated = PointProcessFamily({**inside, **extra})
        other = build_r_ball_limit(us, mutated, r)
        failed += other.shape != base.shape or other.labels != base.labels
    return failed


def criterion_12(seed: int, scale: str) -> Check:
    count = _size(10**4, scale)
    checked, failed = round_trip_failures(count, _rng(seed, 12, 0))
    mutated = sum(window_mutation_failures(_size(2000, scale), r, _rng(seed, 12, r))
                  for r in (1, 2, 3))
    first = report_json(run_suite(seed, "quick", only=DETERMINISM_SUBSET))
    second = report_json(run_suite(seed, "quick", only=DETERMINISM_SUBSET))
    same = first == second
    return Check(12, "structural properties", failed == 0 and mutated == 0 and same,
                 {"round_trips": checked, "round_trip_failures": failed,
                  "window_mutation_failures": mutated,
                  "quick_report_bytes_identical": same})


CRITERIA: dict[int, Callable[[int, str], Check]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12,
}
DETERMINISM_SUBSET = tuple(range(1, 12))


def run_suite(seed: int = DEFAULT_SEED, scale: str = "full", only=None,
              progress: Callable[[Check], None] | None = None) -> dict:
    if scale not in ("full", "quick"):
        raise ValueError("scale must be 'full' or 'quick'")
    checks = []
    for c in (only or CRITERIA):
        start = time.perf_counter()
        check = CRITERIA[c](seed, scale)
        check.seconds = time.perf_counter() - start
        checks.append(check)
        if progress:
            progress(check)
    return {"command": "verify", "seed": seed, "scale": scale, "version": __version__,
            "passed": all(c.passed for c in checks),
            "checks": [c.as_dict() for c in checks]}


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
