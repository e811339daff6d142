"""Shortest and longest paths to a leaf, the bumped set and length bounds."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetExceededError
from .permutation import Permutation, separation_word

DEFAULT_PATH_BUDGET = 2**26


@dataclass(frozen=True)
class BumpPath:
    vertices: tuple[Permutation, ...]
    bumped_positions: tuple[int, ...]
    bumped_values: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.bumped_positions)

    @property
    def leaf(self) -> Permutation:
        return self.vertices[-1]


@dataclass(frozen=True)
class BumpedSet:
    values: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def gaps(self) -> list[int]:
        """b_i - i for i = 1..k."""
        return [b - i for i, b in enumerate(self.values, start=1)]


def _walk(pi: Permutation, pick_left: bool, budget: int | None,
          record: bool) -> tuple[BumpPath | None, int]:
    vals = list(pi.values)
    n = len(vals)
    verts = [pi] if record else None
    positions: list[int] = []
    values: list[int] = []
    steps = 0
    while True:
        if pick_left:
            i = next((p for p in range(2, n + 1) if vals[p - 1] == p), 0)
        else:
            i = next((p for p in range(n, 1, -1) if vals[p - 1] == p), 0)
        if not i:
            break
        if budget is not None and steps >= budget:
            raise BudgetExceededError(f"path longer than {budget} bumps", budget)
        del vals[i - 1]
        vals.insert(0, i)
        steps += 1
        if record:
            verts.append(Permutation._trusted(tuple(vals)))
            positions.append(i)
            values.append(i)
    if not record:
        return None, steps
    return BumpPath(tuple(verts), tuple(positions), tuple(values)), steps


def shortest_path(pi: Permutation) -> BumpPath:
    """Always bump the rightmost true fixed point."""
    path, _ = _walk(pi, False, None, True)
    return path


def shortest_length(pi: Permutation) -> int:
    return _walk(pi, False, None, False)[1]


def longest_path(pi: Permutation, budget: int | None = DEFAULT_PATH_BUDGET) -> BumpPath:
    """Always bump the leftmost true fixed point."""
    path, _ = _walk(pi, True, budget, True)
    return path


def longest_length(pi: Permutation, budget: int | None = DEFAULT_PATH_BUDGET) -> int:
    """Length of the leftmost-bump path, keeping only the current vertex."""
    return _walk(pi, True, budget, False)[1]


def scan_shortest_positions(pi: Permutation) -> list[int]:
    """Right-to-left scan of the separation word picking 0, 1, 2, ...

    Positions come back in selection order, so the letters there are
    bumped in this order along the shortest path.
    """
    word = separation_word(pi).entries
    want = 0
    picked = []
    for i in range(len(word), 0, -1):
        if word[i - 1] == want and not (want == 0 and i == 1):
            picked.append(i)
            want += 1
    return picked


def bumped_set(pi: Permutation) -> BumpedSet:
    """Values bumped along the longest path, found in one right-to-left pass."""
    vals = pi.values
    c = 0
    found = []
    for i in range(len(vals), 0, -1):
        v = vals[i - 1]
        if v != 1 and 0 <= v - i <= c:
            found.append(v)
            c += 1
    return BumpedSet(tuple(sorted(found)))


def lub_bound(pi: Permutation, exact: bool = False) -> float | Fraction:
    """1 + sum_{m<k} prod_{i<=m} (1 + 1/(b_i - i)); zero when nothing is bumped."""
    gaps = bumped_set(pi).gaps()
    one = Fraction(1) if exact else 1.0
    if not gaps:
        return 0 * one
    total = one
    prod = one
    for g in gaps[:-1]:
        prod = prod * (1 + one / g)
        total += prod
    return total


def b_x_subset(pi: Permutation, x: float) -> BumpedSet:
    if not x > 0:
        raise ValueError("x must be positive")
    bs = bumped_set(pi)
    return BumpedSet(tuple(b for b, g in zip(bs.values, bs.gaps()) if g < x))


def simple_upper_bound(pi: Permutation, x: float, exact: bool = False) -> float | Fraction:
    """2^|B_x| |B| (1 + 1/x)^|B|."""
    if not x > 0:
        raise ValueError("x must be positive")
    k = len(bumped_set(pi))
    kx = len(b_x_subset(pi, x))
    if exact:
        xq = Fraction(x)
        return 2**kx * k * (1 + 1 / xq) ** k
    return 2.0**kx * k * (1 + 1 / x) ** k
