"""The limit tree: point-process families, forward/backward maps and walks.

A vertex of the limit tree is a family k -> xi_k of finite point sets in
(0, 1); xi_k holds the rescaled locations of k-separated letters.  A
child is obtained by the forward map at an atom of xi_0 and the parent
by the backward map at a fresh point u.

Walk samplers read their randomness from a ``UniformStream`` and draw
the levels xi_0, xi_1, ... in increasing order, each as a Poisson(1)
count (by inversion of one uniform) followed by that many uniforms.
The compiled batch samplers consume the stream in exactly the same way,
so for a given seed they return exactly what the step-by-step walks on
``PointProcessFamily`` objects return.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numba as nb
import numpy as np

from .errors import CoincidentPointError, NotAnAtomError
from .forest import Ball, RootedTreeShape, canonical_shape, make_ball

log = logging.getLogger(__name__)

Points = tuple[float, ...]


class PointProcessFamily:
    """A family k -> xi_k of sorted point tuples, materialised on demand.

    Levels given explicitly are stored as is; any other level comes from
    ``source(k)`` on first access (empty when there is no source).
    """

    __slots__ = ("_levels", "_source")

    def __init__(self, levels: Mapping[int, Sequence[float]] | None = None,
                 source: Callable[[int], Sequence[float]] | None = None,
                 _checked: bool = False):
        self._levels: dict[int, Points] = {}
        self._source = source
        if levels:
            for k, pts in levels.items():
                self._levels[int(k)] = tuple(pts) if _checked else _validate(pts)
            if not _checked:
                _check_disjoint(self._levels.values())

    @classmethod
    def poisson(cls, seed: int) -> "PointProcessFamily":
        """Independent unit-intensity processes, level k keyed by (seed, k)."""
        def source(k: int) -> Points:
            key = 2 * k if k >= 0 else -2 * k - 1
            return sample_ppp(np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,))))
        return cls(source=source)

    def level(self, k: int) -> Points:
        got = self._levels.get(k)
        if got is None:
            got = tuple(self._source(k)) if self._source is not None else ()
            self._levels[k] = got
        return got

    @property
    def atoms(self) -> Points:
        return self.level(0)

    def window(self, lo: int, hi: int) -> dict[int, Points]:
        return {k: self.level(k) for k in range(lo, hi + 1)}

    def materialised(self) -> dict[int, Points]:
        return dict(self._levels)

    def __repr__(self) -> str:
        shown = {k: v for k, v in sorted(self._levels.items()) if v}
        return f"PointProcessFamily({shown})"


def _validate(pts: Sequence[float]) -> Points:
    out = tuple(float(p) for p in pts)
    for a, b in zip(out, out[1:]):
        if not a < b:
            raise CoincidentPointError(f"points must be strictly increasing: {a}, {b}")
    if out and not (0.0 < out[0] and out[-1] < 1.0):
        raise ValueError("points must lie in the open interval (0, 1)")
    return out


def _check_disjoint(levels) -> None:
    seen: set[float] = set()
    for pts in levels:
        for p in pts:
            if p in seen:
                raise CoincidentPointError(f"point {p} appears on two levels")
            seen.add(p)


def forward_map(fam: PointProcessFamily, x: float) -> PointProcessFamily:
    """Bump the atom x: xi'_k = xi_{k+1} on [0, x) plus xi_k on (x, 1]."""
    if x not in fam.atoms:
        raise NotAnAtomError(f"{x} is not an atom of xi_0")

    def source(k: int) -> Points:
        upper = fam.level(k + 1)
        lower = fam.level(k)
        return upper[:bisect.bisect_left(upper, x)] + lower[bisect.bisect_right(lower, x):]
    return PointProcessFamily(source=source)


def backward_map(fam: PointProcessFamily, u: float) -> PointProcessFamily:
    """Parent through u: xi'_k = xi_{k-1} on [0, u) plus xi_k on (u, 1], u added to xi'_0."""
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie in (0, 1)")
    for pts in (fam.level(0), fam.level(-1), *fam.materialised().values()):
        if u in pts:
            raise CoincidentPointError(f"{u} is already a point of the family")

    def source(k: int) -> Points:
        below = fam.level(k - 1)
        here = fam.level(k)
        left = below[:bisect.bisect_left(below, u)]
        right = here[bisect.bisect_right(here, u):]
        return left + (u,) + right if k == 0 else left + right
    return PointProcessFamily(source=source)


# ---------------------------------------------------------------------------
# sampling

def sample_ppp(rng: np.random.Generator) -> Points:
    """Unit-intensity Poisson process on (0, 1): Poi(1) uniform points, sorted."""
    count = int(rng.poisson(1.0))
    pts: set[float] = set()
    while len(pts) < count:
        p = float(rng.random())
        if p == 0.0 or p in pts:
            log.warning("resampling coincident point %r", p)
            continue
        pts.add(p)
    return tuple(sorted(pts))


def _poisson1_cdf() -> np.ndarray:
    terms = [math.exp(-1.0)]
    for j in range(1, 40):
        terms.append(terms[-1] / j)
    return np.cumsum(terms)


POISSON1_CDF = _poisson1_cdf()
_CDF_LIST = POISSON1_CDF.tolist()


def poisson1_from_uniform(v: float) -> int:
    """Inverse-cdf Poisson(1) draw from one uniform."""
    j = 0
    while j < len(_CDF_LIST) - 1 and v >= _CDF_LIST[j]:
        j += 1
    return j


class UniformStream:
    """Uniforms on [0, 1) from a Generator, pulled in fixed-size blocks."""

    BLOCK = 1 << 14

    def __init__(self, rng: np.random.Generator, block: int = BLOCK):
        self.rng = rng
        self.block = block
        self._buf: list[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self.rng.random(self.block).tolist()
            self._pos = 0
        v = self._buf[self._pos]
        self._pos += 1
        return v


class StreamLevels:
    """Levels 0, 1, 2, ... drawn in order from a uniform stream.

    A point equal to 0 or to any point already drawn is redrawn.
    """

    def __init__(self, stream: UniformStream):
        self.stream = stream
        self.levels: list[Points] = []
        self._seen: set[float] = set()

    def level(self, k: int) -> Points:
        if k < 0:
            return ()
        while len(self.levels) <= k:
            count = poisson1_from_uniform(self.stream.next())
            pts = []
            while len(pts) < count:
                v = self.stream.next()
                if v == 0.0 or v in self._seen:
                    log.warning("resampling coincident point %r", v)
                    continue
                self._seen.add(v)
                pts.append(v)
            self.levels.append(tuple(sorted(pts)))
        return self.levels[k]

    @property
    def consumed(self) -> int:
        """Number of levels materialised so far."""
        return len(self.levels)


def _as_stream(rng) -> UniformStream:
    if isinstance(rng, UniformStream):
        return rng
    return UniformStream(rng, block=64)


def limit_nearest_leaf(rng, return_levels: bool = False):
    """Bump the rightmost atom of xi_0 until xi_0 is empty; returns M.

    With ``return_levels`` the number of levels beyond xi_0 that had to
    be drawn is returned as well.
    """
    levels = StreamLevels(_as_stream(rng))
    fam = PointProcessFamily(source=levels.level, _checked=True)
    count = 0
    while fam.atoms:
        fam = forward_map(fam, fam.atoms[-1])
        count += 1
    if return_levels:
        return count, levels.consumed - 1
    return count


def limit_farthest_leaf(rng) -> int:
    """Bump the leftmost atom of xi_0 until xi_0 is empty; returns L."""
    levels = StreamLevels(_as_stream(rng))
    fam = PointProcessFamily(source=levels.level, _checked=True)
    count = 0
    while fam.atoms:
        fam = forward_map(fam, fam.atoms[0])
        count += 1
    return count


def limit_bumped_scan(rng) -> int:
    """Size of the limit bumped set by the right-to-left scan.

    Moving left from 1, the next point of B is the first point met on
    any of xi_0, ..., xi_c, where c points have been found so far.
    """
    levels = StreamLevels(_as_stream(rng))
    here = 1.0
    found = 0
    while True:
        best = -1.0
        for k in range(found + 1):
            pts = levels.level(k)
            j = bisect.bisect_left(pts, here)
            if j and pts[j - 1] > best:
                best = pts[j - 1]
        if best < 0.0:
            return found
        here = best
        found += 1


def yule_count(t: float, rng) -> int:
    """Jumps of a pure-birth chain (rate k in state k) from 1 during [0, t]."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    stream = _as_stream(rng)
    state = 1
    clock = 0.0
    while True:
        clock += -math.log(1.0 - stream.next()) / state
        if clock > t:
            return state - 1
        state += 1


# ---------------------------------------------------------------------------
# compiled batch samplers

_CAP = 1 << 12


@nb.njit(cache=True)
def _draw_level(u, p, cdf, pos, npts):
    """Append one level to pos; returns (p, npts) or p = -1 if u ran out."""
    if p >= len(u):
        return -1, npts
    v = u[p]
    p += 1
    count = 0
    while count < len(cdf) - 1 and v >= cdf[count]:
        count += 1
    got = 0
    while got < count:
        if p >= len(u):
            return -1, npts
        v = u[p]
        p += 1
        if v == 0.0:
            continue
        dup = False
        for j in range(npts):
            if pos[j] == v:
                dup = True
                break
        if dup:
            continue
        if npts >= len(pos):
            raise ValueError("point storage exhausted")
        pos[npts] = v
        npts += 1
        got += 1
    return p, npts


@nb.njit(cache=True)
def _walk_batch(u, p, out, i, cdf, leftmost):
    pos = np.empty(_CAP, dtype=np.float64)
    lev = np.empty(_CAP, dtype=np.int64)
    alive = np.empty(_CAP, dtype=np.bool_)
    bumps = np.empty(_CAP, dtype=np.float64)
    while i < len(out):
        start = p
        npts = 0
        steps = 0
        while True:
            first = npts
            p, npts = _draw_level(u, p, cdf, pos, npts)
            if p < 0:
                return i, start
            for j in range(first, npts):
                shift = 0
                for b in range(steps):
                    if bumps[b] > pos[j]:
                        shift += 1
                lev[j] = steps - shift
                alive[j] = True
            pick = -1
            for j in range(npts):
                if alive[j] and lev[j] == 0:
                    if pick < 0 or (leftmost and pos[j] < pos[pick]) or \
                            (not leftmost and pos[j] > pos[pick]):
                        pick = j
            if pick < 0:
                break
            x = pos[pick]
            alive[pick] = False
            for j in range(npts):
                if alive[j] and pos[j] < x:
                    lev[j] -= 1
            bumps[steps] = x
            steps += 1
        out[i] = steps
        i += 1
    return i, p


@nb.njit(cache=True)
def _scan_batch(u, p, out, i, cdf):
    pos = np.empty(_CAP, dtype=np.float64)
    lev = np.empty(_CAP, dtype=np.int64)
    while i < len(out):
        start = p
        npts = 0
        found = 0
        here = 1.0
        while True:
            first = npts
            p, npts = _draw_level(u, p, cdf, pos, npts)
            if p < 0:
                return i, start
            for j in range(first, npts):
                lev[j] = found
            best = -1.0
            for j in range(npts):
                if lev[j] <= found and pos[j] < here and pos[j] > best:
                    best = pos[j]
            if best < 0.0:
                break
            here = best
            found += 1
        out[i] = found
        i += 1
    return i, p


@nb.njit(cache=True)
def _yule_batch(u, p, out, i, t):
    while i < len(out):
        start = p
        state = 1
        clock = 0.0
        while True:
            if p >= len(u):
                return i, start
            clock += -np.log(1.0 - u[p]) / state
            p += 1
            if clock > t:
                break
            state += 1
        out[i] = state - 1
        i += 1
    return i, p


def _run_batch(kernel, size: int, rng: np.random.Generator, *args) -> np.ndarray:
    out = np.zeros(size, dtype=np.int64)
    u = rng.random(UniformStream.BLOCK)
    p = 0
    i = 0
    while True:
        i, p = kernel(u, p, out, i, *args)
        if i >= size:
            return out
        u = np.concatenate([u[p:], rng.random(UniformStream.BLOCK)])
        p = 0


def sample_limit_statistic(statistic: str, size: int, rng: np.random.Generator,
                           t: float = 1.0) -> np.ndarray:
    """``size`` draws of a limit statistic: nearest, farthest, scan or yule.

    Draw j equals what the single-walk function returns on the j-th call
    when all calls share ``UniformStream(rng)``.
    """
    if statistic == "nearest":
        return _run_batch(_walk_batch, size, rng, POISSON1_CDF, False)
    if statistic == "farthest":
        return _run_batch(_walk_batch, size, rng, POISSON1_CDF, True)
    if statistic == "scan":
        return _run_batch(_scan_batch, size, rng, POISSON1_CDF)
    if statistic == "yule":
        if t < 0:
            raise ValueError("t must be nonnegative")
        return _run_batch(_yule_batch, size, rng, float(t))
    raise ValueError(f"unknown limit statistic {statistic!r}")


# ---------------------------------------------------------------------------
# trees and balls

@dataclass(frozen=True)
class FamilyTree:
    """Descendants of a family; vertex 0 is the root."""

    families: tuple[PointProcessFamily, ...]
    parent: tuple[int, ...]
    atom: tuple[float | None, ...]
    depth: tuple[int, ...]

    def level_sizes(self) -> list[int]:
        sizes = [0] * (max(self.depth) + 1)
        for d in self.depth:
            sizes[d] += 1
        return sizes

    def shape(self) -> RootedTreeShape:
        kids: dict[int, list[int]] = {}
        for v, p in enumerate(self.parent):
            if p >= 0:
                kids.setdefault(p, []).append(v)
        return canonical_shape(kids, 0)


def descend_tree(fam: PointProcessFamily, depth: int) -> FamilyTree:
    """Every descendant of fam down to the given depth."""
    fams = [fam]
    parent = [-1]
    atom: list[float | None] = [None]
    dist = [0]
    frontier = [0]
    for d in range(1, depth + 1):
        nxt = []
        for v in frontier:
            for x in fams[v].atoms:
                fams.append(forward_map(fams[v], x))
                parent.append(v)
                atom.append(x)
                dist.append(d)
                nxt.append(len(fams) - 1)
        frontier = nxt
    return FamilyTree(tuple(fams), tuple(parent), tuple(atom), tuple(dist))


def build_r_ball_limit(u: Sequence[float], fam: PointProcessFamily, r: int) -> Ball:
    """Radius-r ball around the root of the limit tree.

    The spine rho_0 = fam, rho_i = backward_map(rho_{i-1}, u_i) supplies
    the ancestors.  Below rho_i every atom except u_i starts a new
    subtree, explored down to distance r from the root.  Labels are
    (i, x_1, ..., x_d): start at rho_i and bump x_1, ..., x_d.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if len(u) < r:
        raise ValueError(f"need {r} spine points, got {len(u)}")
    spine = [fam]
    for i in range(1, r + 1):
        spine.append(backward_map(spine[-1], u[i - 1]))
    labels: list[tuple] = [(0,)]
    dist = [0]
    edges: list[tuple[int, int]] = []
    for i in range(1, r + 1):
        labels.append((i,))
        dist.append(i)
        edges.append((i - 1, i))
    for i in range(r):
        skip = u[i - 1] if i >= 1 else None
        frontier = [(spine[i], (i,), i)]
        for d in range(1, r - i + 1):
            nxt = []
            for f, lab, idx in frontier:
                for x in f.atoms:
                    if d == 1 and x == skip:
                        continue
                    labels.append(lab + (x,))
                    dist.append(i + d)
                    edges.append((len(labels) - 1, idx))
                    nxt.append((forward_map(f, x), lab + (x,), len(labels) - 1))
            frontier = nxt
    return make_ball(labels, edges, dist, r)


def sample_window(r: int, rng: np.random.Generator) -> tuple[PointProcessFamily, list[float]]:
    """Levels -r+1..r-1 and spine points u_1..u_r, all distinct."""
    levels: dict[int, Points] = {}
    seen: set[float] = set()
    for k in range(-r + 1, r):
        pts = sample_ppp(rng)
        while seen.intersection(pts):
            log.warning("resampling level %d after a coincident point", k)
            pts = sample_ppp(rng)
        seen.update(pts)
        levels[k] = pts
    us: list[float] = []
    while len(us) < r:
        v = float(rng.random())
        if v == 0.0 or v in seen:
            log.warning("resampling coincident spine point %r", v)
            continue
        seen.add(v)
        us.append(v)
    return PointProcessFamily(levels, _checked=True), us


def sample_limit_ball(r: int, rng: np.random.Generator) -> RootedTreeShape:
    """Shape of the radius-r ball of the limit tree."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    fam, us = sample_window(r, rng)
    return build_r_ball_limit(us, fam, r).shape
