"""Compiled per-row loops for batches of permutations.

Each row of ``batch`` holds one permutation in one-line notation with
1-indexed values.  These mirror the scalar functions in ``paths`` and
``permutation`` and are checked against them in the tests.
"""
from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True)
def _bump_front(a, i):
    # move the value at 1-indexed position i to the front
    v = a[i - 1]
    for p in range(i - 1, 0, -1):
        a[p] = a[p - 1]
    a[0] = v


@nb.njit(cache=True)
def shortest_lengths(batch):
    m, n = batch.shape
    out = np.zeros(m, dtype=np.int64)
    a = np.empty(n, dtype=batch.dtype)
    for r in range(m):
        a[:] = batch[r]
        steps = 0
        while True:
            i = 0
            for p in range(n, 1, -1):
                if a[p - 1] == p:
                    i = p
                    break
            if i == 0:
                break
            _bump_front(a, i)
            steps += 1
        out[r] = steps
    return out


@nb.njit(cache=True)
def longest_lengths(batch, budget):
    """Leftmost-bump path lengths; -1 marks a row that exceeded the budget."""
    m, n = batch.shape
    out = np.zeros(m, dtype=np.int64)
    a = np.empty(n, dtype=batch.dtype)
    for r in range(m):
        a[:] = batch[r]
        steps = 0
        while True:
            i = 0
            for p in range(2, n + 1):
                if a[p - 1] == p:
                    i = p
                    break
            if i == 0:
                break
            if steps >= budget:
                steps = -1
                break
            _bump_front(a, i)
            steps += 1
        out[r] = steps
    return out


@nb.njit(cache=True)
def bumped_counts(batch, xs):
    """|B| and |B_x| for each row and each threshold in xs."""
    m, n = batch.shape
    k_out = np.zeros(m, dtype=np.int64)
    kx_out = np.zeros((m, len(xs)), dtype=np.int64)
    member = np.zeros(n + 1, dtype=np.bool_)
    for r in range(m):
        member[:] = False
        c = 0
        for i in range(n, 0, -1):
            v = batch[r, i - 1]
            if v != 1 and 0 <= v - i <= c:
                member[v] = True
                c += 1
        k_out[r] = c
        idx = 0
        for v in range(2, n + 1):
            if member[v]:
                idx += 1
                for j in range(len(xs)):
                    if v - idx < xs[j]:
                        kx_out[r, j] += 1
    return k_out, kx_out


@nb.njit(cache=True)
def tail_increasing(batch):
    """True where the values after the value 1 increase."""
    m, n = batch.shape
    out = np.zeros(m, dtype=np.bool_)
    for r in range(m):
        q = 0
        while batch[r, q] != 1:
            q += 1
        ok = True
        for p in range(q + 1, n - 1):
            if batch[r, p] > batch[r, p + 1]:
                ok = False
                break
        out[r] = ok
    return out


@nb.njit(cache=True)
def sort_step_counts(batch, budget):
    """Sort steps to the base by direct iteration; -1 past the budget."""
    m, n = batch.shape
    out = np.zeros(m, dtype=np.int64)
    a = np.empty(n, dtype=batch.dtype)
    for r in range(m):
        a[:] = batch[r]
        steps = 0
        while a[0] != 1:
            if steps >= budget:
                steps = -1
                break
            v = a[0]
            for p in range(0, v - 1):
                a[p] = a[p + 1]
            a[v - 1] = v
            steps += 1
        out[r] = steps
    return out


def permutation_batch(rng: np.random.Generator, size: int, n: int) -> np.ndarray:
    """``size`` independent uniform permutations of {1..n}, one per row."""
    dtype = np.int16 if n < 2**15 else np.int32
    base = np.tile(np.arange(1, n + 1, dtype=dtype), (size, 1))
    return rng.permuted(base, axis=1)
