"""The fixed point forest F_n: exact construction, local balls and oracles.

Vertices are indexed by their Lehmer rank, which coincides with the
lexicographic index of the one-line notation.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import BudgetExceededError, SizeLimitError
from .permutation import (Permutation, children, is_leaf, one_line,
                          sort_step)

MAX_FOREST_N = 9


def lehmer_rank(pi: Permutation) -> int:
    vals = pi.values
    n = len(vals)
    rank = 0
    for i, v in enumerate(vals):
        smaller = sum(1 for w in vals[i + 1:] if w < v)
        rank += smaller * math.factorial(n - 1 - i)
    return rank


def lehmer_unrank(rank: int, n: int) -> Permutation:
    if not 0 <= rank < math.factorial(n):
        raise ValueError(f"rank {rank} outside 0..{n}!-1")
    pool = list(range(1, n + 1))
    out = []
    for i in range(n - 1, -1, -1):
        f = math.factorial(i)
        digit, rank = divmod(rank, f)
        out.append(pool.pop(digit))
    return Permutation._trusted(tuple(out))


def _rank_rows(rows: np.ndarray) -> np.ndarray:
    """Vectorised Lehmer rank of each row of a (m, n) array."""
    m, n = rows.shape
    ranks = np.zeros(m, dtype=np.int64)
    for i in range(n - 1):
        smaller = (rows[:, i + 1:] < rows[:, i:i + 1]).sum(axis=1)
        ranks += smaller * math.factorial(n - 1 - i)
    return ranks


# ---------------------------------------------------------------------------
# rooted tree shapes

@dataclass(frozen=True)
class RootedTreeShape:
    """Canonical code of a finite rooted tree; equal codes iff isomorphic."""

    code: bytes
    vertex_count: int
    depth: int

    def __str__(self) -> str:
        return self.code.decode()


LEAF_TOKEN = b"()"


def canonical_shape(children_of: Mapping[Hashable, Iterable[Hashable]],
                    root: Hashable) -> RootedTreeShape:
    """AHU encoding: a vertex is "(" + its sorted child codes + ")".

    ``children_of`` maps each vertex to its children; vertices missing
    from the mapping are leaves.
    """
    order = []
    depth = {root: 0}
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        for c in children_of.get(v, ()):
            depth[c] = depth[v] + 1
            stack.append(c)
    code: dict = {}
    for v in reversed(order):
        kids = sorted(code.pop(c) for c in children_of.get(v, ()))
        code[v] = b"(" + b"".join(kids) + b")"
    return RootedTreeShape(code[root], len(order), max(depth.values()))


@dataclass(frozen=True)
class Ball:
    """A labelled radius-r ball around a root vertex.

    ``edges`` hold (child, parent) index pairs in the forest orientation,
    i.e. parent = sort_step(child); ``dist`` is the graph distance from
    the root.  Vertex 0 is the root.
    """

    labels: tuple
    edges: tuple[tuple[int, int], ...]
    dist: tuple[int, ...]
    radius: int
    shape: RootedTreeShape = field(compare=False)

    @property
    def root(self):
        return self.labels[0]

    def __len__(self) -> int:
        return len(self.labels)

    def rooted_children(self) -> dict[int, list[int]]:
        """Orientation away from the root, ignoring forest direction."""
        out: dict[int, list[int]] = {}
        for a, b in self.edges:
            if self.dist[a] < self.dist[b]:
                a, b = b, a
            out.setdefault(b, []).append(a)
        return out


def make_ball(labels: Sequence, edges: Sequence[tuple[int, int]],
              dist: Sequence[int], radius: int) -> Ball:
    tmp = Ball(tuple(labels), tuple(edges), tuple(dist), radius,
               RootedTreeShape(b"", 0, 0))
    shape = canonical_shape(tmp.rooted_children(), 0)
    return Ball(tmp.labels, tmp.edges, tmp.dist, radius, shape)


def bfs_ball(root, radius: int, parent_of: Callable, children_of: Callable) -> Ball:
    """Breadth-first ball in a forest given parent/children callbacks.

    In a forest the ball is automatically the induced subgraph, since
    two adjacent vertices always sit at neighbouring distances.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    index = {root: 0}
    labels = [root]
    dist = [0]
    edges = []
    frontier = [root]
    for d in range(1, radius + 1):
        nxt = []
        for v in frontier:
            iv = index[v]
            p = parent_of(v)
            if p is not None and p not in index:
                index[p] = len(labels)
                labels.append(p)
                dist.append(d)
                edges.append((iv, index[p]))
                nxt.append(p)
            for c in children_of(v):
                if c not in index:
                    index[c] = len(labels)
                    labels.append(c)
                    dist.append(d)
                    edges.append((index[c], iv))
                    nxt.append(c)
        frontier = nxt
    return make_ball(labels, edges, dist, radius)


def _parent_or_none(pi: Permutation):
    return None if pi.is_base() else sort_step(pi)


def _sorted_children(pi: Permutation) -> list[Permutation]:
    return sorted(children(pi), key=lambda c: c.values)


def local_r_ball(pi: Permutation, r: int) -> Ball:
    """Radius-r ball around pi in F_n, explored directly from pi."""
    return bfs_ball(pi, r, _parent_or_none, _sorted_children)


# ---------------------------------------------------------------------------
# the whole forest

@dataclass
class ForestGraph:
    n: int
    perms: np.ndarray
    parent: np.ndarray
    child_start: np.ndarray
    child_list: np.ndarray

    def __len__(self) -> int:
        return len(self.parent)

    def vertex(self, rank: int) -> Permutation:
        return Permutation._trusted(tuple(int(v) for v in self.perms[rank]))

    def rank(self, pi: Permutation) -> int:
        if pi.n != self.n:
            raise ValueError(f"permutation of size {pi.n} in a forest of size {self.n}")
        return lehmer_rank(pi)

    def parent_of(self, rank: int) -> int | None:
        p = int(self.parent[rank])
        return None if p < 0 else p

    def children_of(self, rank: int) -> list[int]:
        lo, hi = self.child_start[rank], self.child_start[rank + 1]
        return [int(c) for c in self.child_list[lo:hi]]

    def bases(self) -> np.ndarray:
        return np.flatnonzero(self.parent < 0)

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(np.diff(self.child_start) == 0)

    def edges(self) -> list[tuple[int, int]]:
        """(child, parent) rank pairs in rank order of the child."""
        kids = np.flatnonzero(self.parent >= 0)
        return [(int(c), int(self.parent[c])) for c in kids]

    def base_rank(self, rank: int) -> int:
        seen = 0
        while self.parent[rank] >= 0:
            rank = int(self.parent[rank])
            seen += 1
            if seen > len(self.parent):
                raise RuntimeError("cycle in forest")
        return rank

    def is_acyclic(self) -> bool:
        """Every vertex reaches a base; checked by pointer jumping."""
        ptr = np.where(self.parent < 0, np.arange(len(self.parent)), self.parent)
        for _ in range(max(1, len(ptr)).bit_length() + 1):
            ptr = ptr[ptr]
        return bool(np.all(self.parent[ptr] < 0))

    def ball(self, pi: Permutation, r: int) -> Ball:
        """Ball extracted from the stored graph, labelled by permutations."""
        inner = bfs_ball(self.rank(pi), r, self.parent_of, self.children_of)
        labels = tuple(self.vertex(v) for v in inner.labels)
        return Ball(labels, inner.edges, inner.dist, r, inner.shape)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["vertex_rank", "one_line", "parent_rank_or_empty"])
        for v in range(len(self)):
            p = self.parent_of(v)
            w.writerow([v, one_line(self.vertex(v)), "" if p is None else p])
        return buf.getvalue()


def build_forest(n: int, max_n: int = MAX_FOREST_N) -> ForestGraph:
    """All of F_n, with parent = sort_step and children inverted."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > max_n:
        raise SizeLimitError(f"n={n} exceeds the forest size cap {max_n}")
    dtype = np.int8 if n < 127 else np.int16
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=dtype)
    total = len(perms)
    parent = np.full(total, -1, dtype=np.int64)
    front = perms[:, 0]
    for a in range(2, n + 1):
        rows = np.flatnonzero(front == a)
        block = perms[rows]
        moved = np.concatenate(
            [block[:, 1:a], np.full((len(rows), 1), a, dtype=dtype), block[:, a:]], axis=1)
        parent[rows] = _rank_rows(moved)
    kids = np.flatnonzero(parent >= 0)
    order = kids[np.argsort(parent[kids], kind="stable")]
    counts = np.bincount(parent[kids], minlength=total)
    start = np.zeros(total + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    return ForestGraph(n, perms, parent, start, order)


# ---------------------------------------------------------------------------
# brute-force oracles

def brute_nearest_leaf(pi: Permutation) -> int:
    """Breadth-first search for the shallowest descendant leaf."""
    level = {pi}
    depth = 0
    while True:
        if any(is_leaf(v) for v in level):
            return depth
        nxt = set()
        for v in level:
            nxt.update(children(v))
        level = nxt
        depth += 1


def brute_farthest_leaf(pi: Permutation, budget_nodes: int = 10**7) -> int:
    """Depth of the deepest descendant leaf, by exhaustive depth-first search."""
    best = 0
    visited = 0
    stack = [(pi, 0)]
    while stack:
        v, d = stack.pop()
        visited += 1
        if visited > budget_nodes:
            raise BudgetExceededError(
                f"more than {budget_nodes} descendants visited", budget_nodes)
        kids = children(v)
        if not kids:
            best = max(best, d)
        for c in kids:
            stack.append((c, d + 1))
    return best


# ---------------------------------------------------------------------------
# export

def _label(v) -> str:
    return one_line(v) if isinstance(v, Permutation) else str(v)


def export_dot(obj: ForestGraph | Ball, name: str = "F") -> str:
    """DOT digraph with edges directed child -> parent."""
    lines = [f"digraph {name} {{"]
    if isinstance(obj, ForestGraph):
        labels = [_label(obj.vertex(v)) for v in range(len(obj))]
        edges = obj.edges()
    else:
        labels = [_label(v) for v in obj.labels]
        edges = list(obj.edges)
    for i, lab in enumerate(labels):
        lines.append(f'  v{i} [label="{lab}"];')
    for c, p in edges:
        lines.append(f"  v{c} -> v{p};")
    lines.append("}")
    return "\n".join(lines) + "\n"
