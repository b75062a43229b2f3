"""Homogeneous cochains on F2, the coboundary, and Brooks quasimorphisms.

Homogeneity here is right-invariance, c(g0 h, ..., gn h) = c(g0, ..., gn),
which is why the quasimorphism 2-cocycle is written with g_i g_j^-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from bcoh.words import (
    IDENTITY,
    Word,
    cyclically_reduce,
    exponent_sum,
    invert,
    is_proper_power,
    multiply,
    random_word,
)


@dataclass(frozen=True)
class Cochain:
    """A degree-n cochain: a real function of (n+1) words.

    ``sup_bound`` is None when no finite bound is known.
    """

    degree: int
    fn: Callable[..., float] = field(repr=False)
    sup_bound: Optional[float] = None
    name: str = "cochain"

    def __call__(self, *words: Word) -> float:
        if len(words) != self.degree + 1:
            raise ValueError(f"{self.name} takes {self.degree + 1} arguments, got {len(words)}")
        return self.fn(*words)

    def eval_many(self, tuples: Sequence[Sequence[Word]]) -> list[float]:
        batch = getattr(self.fn, "eval_many", None)
        if batch is not None:
            return list(batch(tuples))
        return [self.fn(*t) for t in tuples]

    def normalized(self) -> "Cochain":
        """Subtract c(e, ..., e); harmless on cocycles (see module docs)."""
        k = self.fn(*([IDENTITY] * (self.degree + 1)))
        if k == 0:
            return self
        fn = self.fn
        bound = None if self.sup_bound is None else self.sup_bound + abs(k)
        return Cochain(self.degree, lambda *w: fn(*w) - k, bound, self.name + "-normalized")


def zero_cochain(degree: int) -> Cochain:
    return Cochain(degree, lambda *w: 0.0, 0.0, "zero")


def constant_cochain(degree: int, value: float) -> Cochain:
    return Cochain(degree, lambda *w: value, abs(value), f"const({value})")


def coboundary(c: Cochain) -> Cochain:
    """(dc)(g0..g_{n+1}) = sum_i (-1)^i c(g0, .., g_i omitted, .., g_{n+1})."""
    fn = c.fn

    def dc(*g: Word) -> float:
        total = 0.0
        for i in range(len(g)):
            v = fn(*(g[:i] + g[i + 1 :]))
            total = total + v if i % 2 == 0 else total - v
        return total

    bound = None if c.sup_bound is None else (c.degree + 2) * c.sup_bound
    return Cochain(c.degree + 1, dc, bound, f"d({c.name})")


@dataclass(frozen=True)
class Quasimorphism:
    fn: Callable[[Word], float] = field(repr=False)
    defect_bound: Optional[float] = None
    homogeneous: bool = False
    name: str = "qm"

    def __call__(self, w: Word) -> float:
        return self.fn(w)


def count_occurrences(pattern: Sequence[int], letters: Sequence[int]) -> int:
    k = len(pattern)
    pat = tuple(pattern)
    return sum(1 for i in range(len(letters) - k + 1) if tuple(letters[i : i + k]) == pat)


def brooks_counting(pattern: Word) -> Quasimorphism:
    """Plain (inhomogeneous) Brooks counting quasimorphism, overlaps allowed."""
    if not pattern:
        raise ValueError("pattern must be nonempty")
    p, pinv = pattern.letters, invert(pattern).letters

    def phi(w: Word) -> float:
        return float(count_occurrences(p, w.letters) - count_occurrences(pinv, w.letters))

    # each of the three junctions in u*v carries at most |p|-1 straddling hits
    return Quasimorphism(phi, 3.0 * (len(p) - 1), False, f"brooks({pattern.text()})")


def _cyclic_count(pattern: tuple[int, ...], core: tuple[int, ...]) -> int:
    n, k = len(core), len(pattern)
    if n == 0:
        return 0
    reps = -(-(n + k) // n)
    periodic = core * reps
    return sum(1 for i in range(n) if periodic[i : i + k] == pattern)


def brooks_homogeneous(pattern: Word) -> Quasimorphism:
    """Homogenized Brooks quasimorphism, evaluated exactly on the cyclic core."""
    if not pattern:
        raise ValueError("pattern must be nonempty")
    if is_proper_power(pattern):
        raise ValueError(f"pattern {pattern} is a proper power")
    p, pinv = pattern.letters, invert(pattern).letters

    @lru_cache(maxsize=65536)
    def phibar(w: Word) -> float:
        core, _ = cyclically_reduce(w)
        return float(_cyclic_count(p, core.letters) - _cyclic_count(pinv, core.letters))

    # homogenization at most doubles the defect
    return Quasimorphism(phibar, 6.0 * (len(p) - 1), True, f"brooks~({pattern.text()})")


def homomorphism_qm(generator: str = "a") -> Quasimorphism:
    return Quasimorphism(lambda w: float(exponent_sum(w, generator)), 0.0, True, f"hom({generator})")


def limit_homogenization(q: Quasimorphism, w: Word, n: int = 64) -> float:
    """phi(w^n)/n, the truncated limit that defines the homogenization."""
    return q(w**n) / n


def defect_estimate(q: Quasimorphism, max_len: int, samples: int, seed: int = 0) -> float:
    """Sampled sup of |q(u) + q(v) - q(uv)|; a lower bound for the defect."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        u = random_word(rng, max_len)
        v = random_word(rng, max_len)
        best = max(best, abs(q(u) + q(v) - q(multiply(u, v))))
    return best


def qm_to_two_cocycle(q: Quasimorphism) -> Cochain:
    """c(g0, g1, g2) = q(g0 g1^-1) + q(g1 g2^-1) - q(g0 g2^-1)."""
    if not q.homogeneous:
        raise ValueError("quasimorphism must be homogeneous")
    if q.defect_bound is None or not math.isfinite(q.defect_bound):
        raise ValueError("quasimorphism needs a finite defect bound")

    def c(g0: Word, g1: Word, g2: Word) -> float:
        return (
            q(multiply(g0, invert(g1))) + q(multiply(g1, invert(g2))) - q(multiply(g0, invert(g2)))
        )

    return Cochain(2, c, q.defect_bound, f"dq[{q.name}]")


def one_cochain_from_qm(q: Quasimorphism) -> Cochain:
    """The (unbounded) 1-cochain (g0, g1) -> q(g0 g1^-1) whose coboundary is qm_to_two_cocycle."""
    return Cochain(1, lambda g0, g1: q(multiply(g0, invert(g1))), None, f"q1[{q.name}]")


def sup_norm_estimate(c: Cochain, max_len: int, samples: int, seed: int = 0) -> float:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        args = [random_word(rng, max_len) for _ in range(c.degree + 1)]
        best = max(best, abs(c(*args)))
    return best
