"""Permutations and the bump / sort dynamics of the fixed point forest.

A permutation is stored in one-line notation with 1-indexed values.
Every position argument is 1-indexed too.  The parent of a non-base
permutation is obtained by a *sort step* (move the front value ``a`` so
that it sits at position ``a``); its children are obtained by *bumping*
a true fixed point to the front.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (BasePermutationError, BudgetExceededError,
                     InvalidBumpError, PermutationError)


@dataclass(frozen=True)
class Permutation:
    """A bijection of {1..n} in one-line notation."""

    values: tuple[int, ...]

    def __init__(self, values: Iterable[int]):
        vals = tuple(int(v) for v in values)
        _check_bijection(vals)
        object.__setattr__(self, "values", vals)

    @classmethod
    def _trusted(cls, values: tuple[int, ...]) -> "Permutation":
        # skips validation; only for values produced by our own moves
        obj = object.__new__(cls)
        object.__setattr__(obj, "values", values)
        return obj

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        if n < 1:
            raise PermutationError("n must be at least 1")
        return cls._trusted(tuple(range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> int:
        """π(i) for a 1-indexed position i."""
        if not 1 <= i <= len(self.values):
            raise IndexError(f"position {i} outside 1..{len(self.values)}")
        return self.values[i - 1]

    def __iter__(self):
        return iter(self.values)

    def __str__(self) -> str:
        return one_line(self)

    def __repr__(self) -> str:
        return f"Permutation({one_line(self)!r})"

    def is_base(self) -> bool:
        return self.values[0] == 1


@dataclass(frozen=True)
class SeparationWord:
    """entries[i-1] = π(i) - i."""

    entries: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __str__(self) -> str:
        # negative letters are written with a leading minus sign
        return " ".join(str(e) for e in self.entries)


def _check_bijection(vals: Sequence[int]) -> None:
    n = len(vals)
    if n < 1:
        raise PermutationError("a permutation needs at least one value")
    seen = [False] * (n + 1)
    for pos, v in enumerate(vals, start=1):
        if not 1 <= v <= n:
            raise PermutationError(f"value {v} at position {pos} is outside 1..{n}")
        if seen[v]:
            raise PermutationError(f"duplicate value {v} at position {pos}")
        seen[v] = True


def one_line(pi: Permutation) -> str:
    """Compact one-line notation: digits run together when n <= 9."""
    if pi.n <= 9:
        return "".join(str(v) for v in pi.values)
    return " ".join(str(v) for v in pi.values)


_SEP = re.compile(r"[,\s]+")


def parse_permutation(text: str) -> Permutation:
    """Parse "3 2 4 1 5", "3,2,4,1,5" or the compact "32415" (n <= 9)."""
    tokens = [t for t in _SEP.split(text.strip()) if t]
    if not tokens:
        raise PermutationError("empty permutation text")
    if len(tokens) == 1 and len(tokens[0]) > 1 and tokens[0].isdigit():
        tokens = list(tokens[0])
    try:
        vals = [int(t) for t in tokens]
    except ValueError as exc:
        raise PermutationError(f"not an integer: {exc}") from None
    return Permutation(vals)


def separation_word(pi: Permutation) -> SeparationWord:
    return SeparationWord(tuple(v - i for i, v in enumerate(pi.values, start=1)))


def true_fixed_points(pi: Permutation) -> list[int]:
    """Positions i != 1 with π(i) = i, ascending."""
    vals = pi.values
    if len(vals) > 256:
        arr = np.asarray(vals)
        hits = np.flatnonzero(arr == np.arange(1, len(vals) + 1)) + 1
        return [int(i) for i in hits if i != 1]
    return [i for i, v in enumerate(vals[1:], start=2) if v == i]


def is_derangement(pi: Permutation) -> bool:
    return all(v != i for i, v in enumerate(pi.values, start=1))


def is_leaf(pi: Permutation) -> bool:
    return not true_fixed_points(pi)


def sort_step(pi: Permutation) -> Permutation:
    """Move the front value a to position a; this is the parent of pi."""
    vals = pi.values
    a = vals[0]
    if a == 1:
        raise BasePermutationError(f"{pi} is a base (π(1) = 1)")
    return Permutation._trusted(vals[1:a] + (a,) + vals[a:])


def bump(pi: Permutation, i: int) -> Permutation:
    """Move the true fixed point at position i to the front."""
    vals = pi.values
    if i == 1 or not 1 <= i <= len(vals) or vals[i - 1] != i:
        raise InvalidBumpError(f"position {i} is not a true fixed point of {pi}")
    return Permutation._trusted((i,) + vals[:i - 1] + vals[i:])


def children(pi: Permutation) -> set[Permutation]:
    return {bump(pi, i) for i in true_fixed_points(pi)}


def base_of(pi: Permutation, budget: int | None = None) -> Permutation:
    """Base of the tree containing pi, by direct iteration of sort_step."""
    vals = list(pi.values)
    steps = 0
    while vals[0] != 1:
        if budget is not None and steps >= budget:
            raise BudgetExceededError(f"no base within {budget} sort steps", budget)
        a = vals.pop(0)
        vals.insert(a - 1, a)
        steps += 1
    return Permutation._trusted(tuple(vals))


def distance_to_base(pi: Permutation, budget: int | None = None) -> int:
    """Number of sort steps from pi to its base.

    The count can be exponential in n, so it is computed from the exit
    order of the cards in front of the value 1 (see ``_Deck``) rather
    than by stepping.  ``budget`` bounds the number of distinct
    sub-decks that may be solved.
    """
    q = pi.values.index(1)
    if q == 0:
        return 0
    solver = _Deck(budget)
    with _deep_recursion(4 * q + 200):
        _, steps = solver.exits_and_steps(pi.values[:q])
    return steps


def in_identity_tree(pi: Permutation, budget: int | None = None) -> bool:
    """True iff iterating sort_step from pi ends at the identity.

    Cards behind the value 1 never reorder, and the cards in front of it
    leave in an order that fixes the base.  The identity is reached iff
    the cards behind 1 are increasing and the cards in front leave in
    decreasing order of value, so the walk itself is never simulated.
    """
    vals = pi.values
    n = len(vals)
    q = vals.index(1)
    tail = vals[q + 1:]
    for k in range(len(tail) - 1):
        if tail[k] > tail[k + 1]:
            return False
    # tail is n-s+1..n: every card in front exits in a forced order
    if not tail or tail[0] == n - len(tail) + 1:
        return True
    deck = list(vals[:q])
    size = len(deck)
    # big cards never pass each other, so they must already be decreasing
    big = [v for v in deck if v > size]
    for k in range(len(big) - 1):
        if big[k] < big[k + 1]:
            return False
    solver = _Deck(budget)
    with _deep_recursion(4 * q + 200):
        return solver.exits_decreasing(deck)


def exit_order(deck: Sequence[int], budget: int | None = None) -> list[int]:
    """Order in which the cards of a deck leave under the sort dynamics.

    The deck is the run of cards in front of the value 1.  The top card
    a is reinserted at position a when a <= len(deck) and otherwise
    leaves the deck; leaving cards are the ones that pass the value 1.
    """
    if len(set(deck)) != len(deck) or any(v < 2 for v in deck):
        raise PermutationError("a deck holds distinct values of at least 2")
    solver = _Deck(budget)
    with _deep_recursion(4 * len(deck) + 200):
        return list(solver.exits(tuple(deck)))


def base_from_exits(pi: Permutation, budget: int | None = None) -> Permutation:
    """Base of pi computed from the exit order instead of by stepping."""
    vals = pi.values
    q = vals.index(1)
    tail = list(vals[q + 1:])
    # the j-th leaving card a lands at position a of the whole permutation
    for j, a in enumerate(exit_order(vals[:q], budget)):
        tail.insert(a - (q + 1 - j), a)
    return Permutation._trusted((1,) + tuple(tail))


def random_permutation(n: int, rng: np.random.Generator) -> Permutation:
    """Uniform permutation of {1..n}, driven by a numpy Generator."""
    if n < 1:
        raise PermutationError("n must be at least 1")
    return Permutation._trusted(tuple((rng.permutation(n) + 1).tolist()))


class _deep_recursion:
    """Temporarily raise the interpreter recursion limit."""

    def __init__(self, depth: int):
        self.depth = depth

    def __enter__(self):
        self.old = sys.getrecursionlimit()
        if self.depth > self.old:
            sys.setrecursionlimit(self.depth)

    def __exit__(self, *exc):
        sys.setrecursionlimit(self.old)
        return False


# Exit-order solver.
#
# Write the deck as S + [b] + R where b is the first card whose value
# exceeds the deck length.  Cards of S circulate above b until each one
# is big relative to what is left of S; the j-th card to leave S (value
# a) lands at index a - (len(S) - j) - 1 of R.  Then b leaves, and the
# process restarts on the shorter deck.  A sub-deck holding every value
# 2..m plus one larger card x leaves as x, m, m-1, ..., 2.  Values larger
# than the sub-deck length never matter beyond their identity, so they
# are replaced by tokens before memoisation.

def _canonical(deck: Sequence[int]) -> tuple[tuple[int, ...], list[int]]:
    m = len(deck)
    big: list[int] = []
    key = []
    for v in deck:
        if v > m:
            big.append(v)
            key.append(-len(big))
        else:
            key.append(v)
    return tuple(key), big


class _Deck:
    """Exit-order solver with a per-call memo, so budgets are reproducible."""

    def __init__(self, budget: int | None):
        self.budget = budget
        self.misses = 0
        self._memo_exits: dict = {}
        self._memo_steps: dict = {}

    def _charge(self) -> None:
        self.misses += 1
        if self.budget is not None and self.misses > self.budget:
            raise BudgetExceededError(
                f"exit-order solver exceeded {self.budget} sub-decks", self.budget)

    def exits(self, deck: tuple[int, ...]) -> tuple[int, ...]:
        key, big = _canonical(deck)
        out = self._memo_exits.get(key)
        if out is None:
            self._charge()
            out = self._solve_exits(key)
            self._memo_exits[key] = out
        return tuple(big[-v - 1] if v < 0 else v for v in out)

    def _solve_exits(self, key: tuple[int, ...]) -> tuple[int, ...]:
        m = len(key)
        small = sum(1 for v in key if 0 < v <= m)
        if small == m - 1:
            x = next(v for v in key if v < 0 or v > m)
            return (x,) + tuple(range(m, 1, -1))
        deck = list(key)
        out = []
        while deck:
            size = len(deck)
            e = next(i for i, v in enumerate(deck) if v < 0 or v > size)
            rest = deck[e + 1:]
            if e:
                for j, a in enumerate(self.exits(tuple(deck[:e]))):
                    rest.insert(a - (e - j) - 1, a)
            out.append(deck[e])
            deck = rest
        return tuple(out)

    def exits_and_steps(self, deck: Sequence[int]) -> tuple[tuple[int, ...], int]:
        key, big = _canonical(deck)
        got = self._memo_steps.get(key)
        if got is None:
            self._charge()
            got = self._solve_steps(key)
            self._memo_steps[key] = got
        out, steps = got
        return tuple(big[-v - 1] if v < 0 else v for v in out), steps

    def _solve_steps(self, key: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
        deck = list(key)
        out = []
        steps = 0
        while deck:
            size = len(deck)
            e = next(i for i, v in enumerate(deck) if v < 0 or v > size)
            rest = deck[e + 1:]
            if e:
                sub, sub_steps = self.exits_and_steps(deck[:e])
                steps += sub_steps
                for j, a in enumerate(sub):
                    rest.insert(a - (e - j) - 1, a)
            steps += 1
            out.append(deck[e])
            deck = rest
        return tuple(out), steps

    def exits_decreasing(self, deck: list[int]) -> bool:
        # top-level loop of _solve_exits that stops at the first exit
        # out of order
        remaining = sorted(deck)
        while deck:
            size = len(deck)
            if sum(1 for v in deck if v <= size) == size - 1:
                return True
            e = next(i for i, v in enumerate(deck) if v > size)
            if deck[e] != remaining[-1]:
                return False
            remaining.pop()
            rest = deck[e + 1:]
            if e:
                for j, a in enumerate(self.exits(tuple(deck[:e]))):
                    rest.insert(a - (e - j) - 1, a)
            deck = rest
        return True
