"""Empirical laws, total variation, Monte Carlo drivers and exact experiments."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels as K
from .errors import BudgetExceededError, PermutationError
from .forest import local_r_ball
from .limit import sample_limit_ball
from .permutation import Permutation, in_identity_tree, random_permutation

TAIL_TOL = 1e-12


# ---------------------------------------------------------------------------
# laws

def poisson_pmf(lam: float, j: int) -> float:
    if not lam > 0:
        raise ValueError("the Poisson mean must be positive")
    if j < 0:
        raise ValueError("j must be nonnegative")
    return math.exp(-lam + j * math.log(lam) - math.lgamma(j + 1))


def geometric_pmf(q: float, j: int) -> float:
    """(1 - q)^j q: failures before the first success."""
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    if j < 0:
        raise ValueError("j must be nonnegative")
    return (1 - q) ** j * q


@dataclass(frozen=True)
class PoissonLaw:
    lam: float

    @property
    def name(self) -> str:
        return f"Poi({self.lam:g})"

    def pmf(self, j: int) -> float:
        return poisson_pmf(self.lam, j)

    def tail(self, j: int) -> float:
        """P[X >= j] by direct summation of the terms."""
        if j <= 0:
            return 1.0
        total = 0.0
        i = j
        term = self.pmf(i)
        while term > 0.0 and (term > 1e-18 * total or i < self.lam):
            total += term
            i += 1
            term *= self.lam / i
        return total

    def moment(self, p: int) -> float:
        # Touchard polynomials at lam
        lam = self.lam
        return [1.0, lam, lam + lam**2, lam + 3 * lam**2 + lam**3,
                lam + 7 * lam**2 + 6 * lam**3 + lam**4][p]


@dataclass(frozen=True)
class GeometricLaw:
    q: float

    @property
    def name(self) -> str:
        return f"Geo({self.q:.6g})"

    def pmf(self, j: int) -> float:
        return geometric_pmf(self.q, j)

    def tail(self, j: int) -> float:
        return (1 - self.q) ** max(j, 0)

    def moment(self, p: int) -> float:
        # sum_j j^p (1-q)^j q, summed until the terms vanish
        total = 0.0
        j = 0
        while True:
            term = j**p * self.pmf(j)
            total += term
            if j > 10 and term < 1e-18 * total:
                return total
            j += 1


Law = PoissonLaw | GeometricLaw


@dataclass
class EmpiricalDistribution:
    counts: dict[int, int] = field(default_factory=dict)
    total: int = 0
    seed: int | None = None
    label: str = ""

    @classmethod
    def from_samples(cls, samples: Iterable[int], seed: int | None = None,
                     label: str = "") -> "EmpiricalDistribution":
        arr = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples,
                         dtype=np.int64)
        if arr.size and arr.min() < 0:
            raise ValueError("samples must be nonnegative integers")
        vals, cnts = np.unique(arr, return_counts=True)
        return cls({int(v): int(c) for v, c in zip(vals, cnts)}, int(arr.size), seed, label)

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        counts = Counter(self.counts)
        counts.update(other.counts)
        return EmpiricalDistribution(dict(counts), self.total + other.total, self.seed, self.label)

    def prob(self, j: int) -> float:
        return self.counts.get(j, 0) / self.total if self.total else 0.0

    def pmf(self) -> list[tuple[int, float]]:
        return [(j, self.counts[j] / self.total) for j in sorted(self.counts)]

    def support_max(self) -> int:
        return max(self.counts) if self.counts else 0

    def tail(self, j: int) -> float:
        return sum(c for v, c in self.counts.items() if v >= j) / self.total

    def tail_count(self, j: int) -> int:
        return sum(c for v, c in self.counts.items() if v >= j)

    def moments(self, order: int = 4) -> list[float]:
        return [sum(c * float(v) ** p for v, c in self.counts.items()) / self.total
                for p in range(1, order + 1)]

    def mean(self) -> float:
        return self.moments(1)[0]


def _as_pmf(p) -> tuple[dict[int, float] | None, Law | None]:
    if isinstance(p, EmpiricalDistribution):
        return {j: c / p.total for j, c in p.counts.items()}, None
    if isinstance(p, (PoissonLaw, GeometricLaw)):
        return None, p
    if isinstance(p, Mapping):
        return {int(j): float(v) for j, v in p.items()}, None
    return {j: float(v) for j, v in enumerate(p)}, None


def tv_distance(p, q) -> float:
    """Half the L1 distance between two laws on the nonnegative integers.

    Either side may be an EmpiricalDistribution, a pmf (mapping or
    sequence) or a PoissonLaw / GeometricLaw.  Theoretical laws are summed
    to max observed value + 64, and the theoretical tail beyond that is
    added as residual mass.
    """
    pa, la = _as_pmf(p)
    pb, lb = _as_pmf(q)
    finite = [d for d in (pa, pb) if d is not None]
    top = max((max(d) for d in finite if d), default=0) + 64
    laws = [law for law in (la, lb) if law is not None]
    while any(law.tail(top) >= TAIL_TOL for law in laws):
        top *= 2

    def value(d, law, j):
        return d.get(j, 0.0) if d is not None else law.pmf(j)

    total = sum(abs(value(pa, la, j) - value(pb, lb, j)) for j in range(top))
    # beyond `top` an empirical law has no mass
    ta = la.tail(top) if la is not None else sum(v for j, v in pa.items() if j >= top)
    tb = lb.tail(top) if lb is not None else sum(v for j, v in pb.items() if j >= top)
    total += abs(ta - tb)
    return min(1.0, max(0.0, 0.5 * total))


def hist_tv(a: Mapping, b: Mapping) -> float:
    """TV between two count histograms over arbitrary hashable keys."""
    na = sum(a.values())
    nb = sum(b.values())
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0) / na - b.get(k, 0) / nb) for k in keys)


def poisson_vector_tv_bound(means_a, means_b) -> float:
    """sum_alpha |a_alpha - b_alpha| over a common index set."""
    if isinstance(means_a, Mapping):
        if set(means_a) != set(means_b):
            raise ValueError("index sets differ")
        return float(sum(abs(means_a[k] - means_b[k]) for k in means_a))
    a = list(means_a)
    b = list(means_b)
    if len(a) != len(b):
        raise ValueError("index sets differ")
    return float(sum(abs(x - y) for x, y in zip(a, b)))


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


# ---------------------------------------------------------------------------
# Monte Carlo over F_n

ALL_STATISTICS = ("M", "L", "B", "Bx", "R", "member")


@dataclass
class ForestStats:
    n: int
    trials: int
    seed: int | None
    x: tuple[float, ...]
    dists: dict[str, EmpiricalDistribution]
    censored: dict[str, int]
    samples: dict[str, np.ndarray] = field(repr=False)


def _batches(n: int, trials: int, rng, exhaustive: bool, batch: int):
    if exhaustive:
        rows = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int16)
        for lo in range(0, len(rows), batch):
            yield rows[lo:lo + batch]
        return
    done = 0
    while done < trials:
        size = min(batch, trials - done)
        yield K.permutation_batch(rng, size, n)
        done += size


def mc_forest_stats(n: int, trials: int, rng: np.random.Generator | None = None, *,
                    x: Sequence[float] = (2.0,), statistics: Sequence[str] = ALL_STATISTICS,
                    exhaustive: bool = False, seed: int | None = None,
                    budget_steps: int = 2**26, budget_sort: int = 10**4,
                    budget_member: int = 1000, batch: int | None = None) -> ForestStats:
    """Per-sample statistics of uniform permutations of size n.

    M and L are the shortest and longest path lengths to a leaf, B the
    bumped set size, Bx the size of B_x for each threshold in ``x``, R
    the number of sort steps to the base and ``member`` the indicator of
    the identity tree.  R is stepped directly and censored past
    ``budget_sort`` steps; membership is censored when the exit-order
    solver needs more than ``budget_member`` sub-decks.  In exhaustive
    mode every permutation of size n is used once and rng is ignored.
    """
    if n < 1 or (not exhaustive and trials < 1):
        raise ValueError("need n >= 1 and trials >= 1")
    unknown = set(statistics) - set(ALL_STATISTICS)
    if unknown:
        raise ValueError(f"unknown statistics {sorted(unknown)}")
    if exhaustive:
        trials = math.factorial(n)
    elif rng is None:
        raise ValueError("rng is required unless exhaustive")
    xs = np.asarray(list(x), dtype=np.float64)
    batch = batch or max(1, min(20000, 2 * 10**7 // max(n, 1)))
    out: dict[str, list[np.ndarray]] = {s: [] for s in statistics if s != "Bx"}
    bx_out: list[np.ndarray] = []
    censored = Counter()
    for rows in _batches(n, trials, rng, exhaustive, batch):
        if "M" in out:
            out["M"].append(K.shortest_lengths(rows))
        if "L" in out:
            lengths = K.longest_lengths(rows, budget_steps)
            if (lengths < 0).any():
                raise BudgetExceededError(
                    f"a longest path exceeded {budget_steps} bumps", budget_steps)
            out["L"].append(lengths)
        if "B" in out or "Bx" in statistics:
            k, kx = K.bumped_counts(rows, xs)
            if "B" in out:
                out["B"].append(k)
            bx_out.append(kx)
        if "R" in out:
            steps = K.sort_step_counts(rows, budget_sort)
            censored["R"] += int((steps < 0).sum())
            out["R"].append(steps[steps >= 0])
        if "member" in out:
            flags = np.zeros(len(rows), dtype=np.int64)
            for r in np.flatnonzero(K.tail_increasing(rows)):
                pi = Permutation._trusted(tuple(rows[r].tolist()))
                try:
                    flags[r] = in_identity_tree(pi, budget_member)
                except BudgetExceededError:
                    flags[r] = -1
            censored["member"] += int((flags < 0).sum())
            out["member"].append(flags[flags >= 0])
    samples = {s: np.concatenate(v) if v else np.zeros(0, np.int64) for s, v in out.items()}
    if "Bx" in statistics:
        allx = np.concatenate(bx_out) if bx_out else np.zeros((0, len(xs)), np.int64)
        for j, xv in enumerate(xs):
            samples[f"Bx:{xv:g}"] = allx[:, j]
    dists = {s: EmpiricalDistribution.from_samples(v, seed, s) for s, v in samples.items()}
    return ForestStats(n, trials, seed, tuple(float(v) for v in xs), dists,
                       {s: censored.get(s, 0) for s in ("R", "member") if s in out}, samples)


def identity_tree_probe(n: int, trials: int, rng: np.random.Generator,
                        budget: int = 1000) -> dict:
    """Estimate n P[pi_n in T_n] with censored samples bracketing the estimate.

    Censored samples count as non-members for the low estimate and as
    members for the high one.  The sigmas are binomial standard errors
    of n P-hat at the boundary values P = 1/n and P = e/n.
    """
    st = mc_forest_stats(n, trials, rng, statistics=("member",), budget_member=budget)
    members = int(st.samples["member"].sum())
    cens = st.censored["member"]
    low = members / trials
    high = (members + cens) / trials
    return {"n": n, "trials": trials, "members": members, "censored": cens,
            "n_p_low": n * low, "n_p_high": n * high,
            "sigma_low": n * binomial_sigma(1 / n, trials),
            "sigma_high": n * binomial_sigma(min(1.0, math.e / n), trials)}


# ---------------------------------------------------------------------------
# local weak convergence

def rball_histogram_compare(n: int, r: int, trials: int, rng: np.random.Generator,
                            limit_trials: int | None = None) -> tuple[float, Counter, Counter]:
    """TV between ball-shape histograms of F_n at a uniform root and of the limit tree."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    finite: Counter = Counter()
    for _ in range(trials):
        finite[local_r_ball(random_permutation(n, rng), r).shape.code] += 1
    limit: Counter = Counter()
    for _ in range(limit_trials or trials):
        limit[sample_limit_ball(r, rng).code] += 1
    return hist_tv(finite, limit), finite, limit


# ---------------------------------------------------------------------------
# exact indicator experiment

@dataclass(frozen=True)
class IndicatorLaw:
    n: int
    r: int
    a: tuple[int, ...]
    index: tuple[tuple[int, int], ...]
    support: dict[frozenset, Fraction]


def indicator_index(n: int, r: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, k) for i in range(r + 1, n + 1) for k in range(-r + 1, r)
                 if 1 <= i + k <= n)


def indicator_law_exact(n: int, r: int, a: Sequence[int],
                        budget: int = math.factorial(8)) -> IndicatorLaw:
    """Exact law of the separation indicators given pi(1..r) = a."""
    if r < 1:
        raise ValueError("the index set is empty unless r >= 1")
    a = tuple(int(v) for v in a)
    if len(a) != r or len(set(a)) != r or not all(1 <= v <= n for v in a):
        raise PermutationError(f"need r={r} distinct conditioning values in 1..{n}")
    count = math.factorial(n - r)
    if count > budget:
        raise BudgetExceededError(f"{count} permutations exceed the budget {budget}", budget)
    index = indicator_index(n, r)
    rest = [v for v in range(1, n + 1) if v not in a]
    tally: Counter = Counter()
    for tail in itertools.permutations(rest):
        vals = a + tail
        tally[frozenset((i, k) for i, k in index if vals[i - 1] == i + k)] += 1
    support = {s: Fraction(c, count) for s, c in tally.items()}
    return IndicatorLaw(n, r, a, index, support)


def indicator_tv_experiment(n: int, r: int, a: Sequence[int],
                            budget: int = math.factorial(8)) -> tuple[float, float]:
    """(exact TV to independent Poi(1/n) coordinates, (16r^2 + 2r)/(n - r - 1)).

    The indicator law is exact; the Poisson side is evaluated with
    50-digit decimals.  Poisson mass off the indicator support is added
    as one minus the mass on it.
    """
    law = indicator_law_exact(n, r, a, budget)
    with localcontext() as ctx:
        ctx.prec = 50
        m = len(law.index)
        base = (Decimal(-m) / Decimal(n)).exp()
        inv_n = Decimal(1) / Decimal(n)
        on_support = Decimal(0)
        diff = Decimal(0)
        for s, prob in law.support.items():
            q = base * inv_n ** len(s)
            on_support += q
            diff += abs(Decimal(prob.numerator) / Decimal(prob.denominator) - q)
        tv = (diff + (1 - on_support)) / 2
    bound = (16 * r * r + 2 * r) / (n - r - 1)
    return float(tv), bound


# ---------------------------------------------------------------------------
# tail checks

def tail_decay_check(samples, c: float, k_range: Iterable[int] = range(1, 13),
                     min_support: int = 100) -> bool:
    """Empirical P[|B| >= k] <= c^k wherever at least min_support samples reach k."""
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    dist = samples if isinstance(samples, EmpiricalDistribution) \
        else EmpiricalDistribution.from_samples(samples)
    for k in k_range:
        if dist.tail_count(k) >= min_support and dist.tail(k) > c**k:
            return False
    return True


def bx_tail_table(samples, x: float, ts: Iterable[int]) -> list[dict]:
    """Rows (t, empirical P[|B_x| >= t], bound (ex/t)^t, z, pass) with 3 sigma slack."""
    dist = samples if isinstance(samples, EmpiricalDistribution) \
        else EmpiricalDistribution.from_samples(samples)
    rows = []
    for t in ts:
        bound = (math.e * x / t) ** t
        emp = dist.tail(t)
        sigma = binomial_sigma(min(bound, 1.0), dist.total)
        z = (emp - bound) / sigma if sigma > 0 else (0.0 if emp <= bound else math.inf)
        rows.append({"t": t, "empirical": emp, "bound": bound, "z": z,
                     "pass": bound >= 1 or emp <= bound + 3 * sigma})
    return rows


def bx_tail_check(n: int, x: float, trials: int, rng: np.random.Generator,
                  ts: Iterable[int] = range(6, 13)) -> list[dict]:
    if not x > 0:
        raise ValueError("x must be positive")
    ts = list(ts)
    if any(t > n - x for t in ts):
        raise ValueError("need t <= n - x")
    st = mc_forest_stats(n, trials, rng, x=(x,), statistics=("Bx",))
    return bx_tail_table(st.samples[f"Bx:{x:g}"], x, ts)
