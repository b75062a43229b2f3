"""Induced cochains: integrate c(gamma(g0, x), ..., gamma(gn, x)) over the surface.

Two integrators:

* ``mc`` draws uniform points of the whole surface.
* ``regions`` uses the closed-form table off the collar (exact region
  areas times one word tuple per region) and Monte Carlo on the collar only.

Sample words are tallied as integer counts per distinct (region, word tuple)
key before any floating point summation, so results are bit-identical for
any number of workers.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from bcoh import sampling
from bcoh.cochains import Cochain, Quasimorphism
from bcoh.eightmodel import (
    LABELS,
    ModelGeometry,
    RegionLabel,
    TransformationElement,
    classify_many,
)
from bcoh.homotopy import (
    CutSystem,
    DegenerateLoopError,
    default_cuts,
    gamma_batch,
    piecewise_parts,
    table_word,
)
from bcoh.words import IDENTITY, Word

CORE_LABELS = (RegionLabel.CORE_BOTH, RegionLabel.CORE_A_ONLY, RegionLabel.CORE_B_ONLY)
_COLLAR_CODE = LABELS.index(RegionLabel.COLLAR)


class RegionsModeError(ValueError):
    pass


def default_workers() -> int:
    return max(1, int(os.environ.get("BCOH_THREADS", "1")))


@dataclass(frozen=True)
class Integrator:
    mode: str = "mc"
    mc_samples: int = 100_000
    seed: int = 0
    tolerance: float = 1e-6  # accepted for config compatibility; regions terms are exact
    workers: Optional[int] = None
    validation_samples: int = 256

    def __post_init__(self):
        if self.mode not in ("mc", "regions"):
            raise ValueError(f"unknown integrator mode {self.mode!r}")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


@dataclass
class InducedValue:
    value: float
    stat_error: float
    collar_bound: float
    mode: str = "mc"
    samples: int = 0
    core_value: Optional[float] = None
    collar_value: Optional[float] = None
    collar_max: float = 0.0
    region_breakdown: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "stat_error": self.stat_error,
            "collar_bound": self.collar_bound,
            "mode": self.mode,
            "samples": self.samples,
            "core_value": self.core_value,
            "collar_value": self.collar_value,
            "collar_max": self.collar_max,
            "region_breakdown": self.region_breakdown,
        }


# ------------------------------------------------------------- sample tally


class Tally:
    """Counts of distinct (region code, word tuple) keys."""

    def __init__(self, widths: Sequence[int]):
        self.widths = list(widths)
        self.counts: Counter = Counter()
        self.total = 0

    def add(self, other: "Tally") -> None:
        self.counts.update(other.counts)
        self.total += other.total

    def items(self):
        """(region code, word tuple, count) in a fixed (sorted-key) order."""
        for key in sorted(self.counts):
            row = np.frombuffer(key, dtype=np.int8)
            words, pos = [], 1
            for wdt in self.widths:
                words.append(Word(tuple(int(c) for c in row[pos : pos + wdt] if c != 0)))
                pos += wdt
            yield int(row[0]), tuple(words), self.counts[key]


def _block_tally(geom, cuts, elements, pts) -> Tally:
    cols = [classify_many(geom, pts)[:, None]]
    widths = []
    for g in elements:
        words, _ = gamma_batch(geom, cuts, g, pts)
        cols.append(words)
        widths.append(words.shape[1])
    rows = np.ascontiguousarray(np.concatenate(cols, axis=1).astype(np.int8))
    view = rows.view(np.dtype((np.void, rows.shape[1]))).ravel()
    uniq, counts = np.unique(view, return_counts=True)
    t = Tally(widths)
    t.counts = Counter({bytes(u): int(c) for u, c in zip(uniq, counts)})
    t.total = len(pts)
    return t


def sample_tally(
    geom: ModelGeometry,
    cuts: CutSystem,
    elements: Sequence[TransformationElement],
    samples: int,
    seed: int,
    where: str = "domain",
    workers: Optional[int] = None,
) -> Tally:
    """Tally gamma word tuples at `samples` counter-based uniform points of the domain or the collar."""
    workers = workers or default_workers()
    bands = geom.collar_bands()

    def run(block: int) -> Tally:
        n = sampling.block_count(samples, block)
        if where == "domain":
            pts = sampling.domain_block(geom, seed, block, n)
        elif where == "collar":
            pts = sampling.annuli_block(bands, seed, sampling.COLLAR, block, n)
        else:
            raise ValueError(where)
        return _block_tally(geom, cuts, elements, pts)

    blocks = range(sampling.n_blocks(samples))
    if workers == 1:
        parts = list(map(run, blocks))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    total = Tally([])
    for p in parts:
        if not total.widths:
            total.widths = p.widths
        total.add(p)
    return total


def _moments(tally: Tally, evaluate: Callable[[list], list]):
    """Mean, 1-sigma of the mean, per-region sums and max |F| on the collar."""
    entries = list(tally.items())
    values = evaluate([e[1] for e in entries])
    n = tally.total
    s1 = math.fsum(c * v for (_, _, c), v in zip(entries, values))
    s2 = math.fsum(c * v * v for (_, _, c), v in zip(entries, values))
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    per_region: dict[str, float] = {}
    collar_max = 0.0
    for (code, _, c), v in zip(entries, values):
        lab = LABELS[code].value
        per_region[lab] = per_region.get(lab, 0.0) + c * v
        if code == _COLLAR_CODE:
            collar_max = max(collar_max, abs(v))
    return mean, math.sqrt(var / n), per_region, collar_max


# ------------------------------------------------------ region conjugators


@lru_cache(maxsize=64)
def region_conjugators(geom: ModelGeometry, cuts: CutSystem, samples: int = 256, seed: int = 0x5EED) -> dict:
    """For each core label: Counter of conjugators u_x over validation points."""
    bands = []
    for i in (0, 1):
        c, r, w = geom.tube(i)
        k = 1.0 - geom.epsilon
        bands.append((c, r - k * w, r + k * w))
    found: dict[RegionLabel, Counter] = {lab: Counter() for lab in CORE_LABELS}
    block = 0
    while min(sum(v.values()) for v in found.values()) < samples and block < 64:
        pts = sampling.annuli_block(bands, seed, sampling.CORES, block, 4096)
        labels = classify_many(geom, pts)
        for p, code in zip(pts, labels):
            lab = LABELS[code]
            if lab in found and sum(found[lab].values()) < samples:
                try:
                    _, u = piecewise_parts(geom, cuts, p)
                except DegenerateLoopError:
                    continue
                found[lab][u] += 1
        block += 1
    return found


def _core_terms(geom, cuts, elements, integ: Integrator) -> list[tuple[RegionLabel, tuple[Word, ...], float, float]]:
    """(label, word tuple, measure, stat error of that measure) for the exact part."""
    for g in elements:
        if not isinstance(g, TransformationElement):
            raise RegionsModeError("regions mode needs pure push-letter elements")
    words = [g.word for g in elements]
    terms = [(RegionLabel.OUTSIDE, tuple(IDENTITY for _ in words), geom.region_measure(RegionLabel.OUTSIDE), 0.0)]
    conj = region_conjugators(geom, cuts, integ.validation_samples)
    for lab in CORE_LABELS:
        mu = geom.region_measure(lab)
        groups: Counter = Counter()
        for u, c in conj[lab].items():
            groups[tuple(table_word(lab, u, w) for w in words)] += c
        n = sum(groups.values())
        if len(groups) == 1:
            terms.append((lab, next(iter(groups)), mu, 0.0))
            continue
        # conjugators not constant here: split the region by sampled fractions
        for tup, c in sorted(groups.items()):
            p = c / n
            terms.append((lab, tup, mu * p, mu * math.sqrt(p * (1 - p) / n)))
    return terms


# ------------------------------------------------------------------ public


def _evaluate_cochain(c: Cochain):
    cache: dict = {}

    def evaluate(tuples):
        todo = [t for t in tuples if t not in cache]
        if todo:
            for t, v in zip(todo, c.eval_many(todo)):
                cache[t] = v
        return [cache[t] for t in tuples]

    return evaluate


def _integrate(geom, cuts, elements, evaluate, sup_bound, integ: Integrator) -> InducedValue:
    mu_b = geom.region_measure(RegionLabel.COLLAR)
    if integ.mode == "mc":
        tally = sample_tally(geom, cuts, elements, integ.mc_samples, integ.seed, "domain", integ.workers)
        mean, sd, per_region, cmax = _moments(tally, evaluate)
        area = geom.area
        breakdown = {k: area * v / tally.total for k, v in sorted(per_region.items())}
        bound = mu_b * (sup_bound if sup_bound is not None else cmax)
        return InducedValue(
            area * mean, area * sd, bound, "mc", tally.total,
            collar_value=breakdown.get(RegionLabel.COLLAR.value, 0.0), collar_max=cmax,
            region_breakdown=breakdown,
        )
    terms = _core_terms(geom, cuts, elements, integ)
    vals = evaluate([t[1] for t in terms])
    breakdown: dict[str, float] = {}
    core_parts, core_var = [], 0.0
    for (lab, _, mu, dmu), v in zip(terms, vals):
        core_parts.append(mu * v)
        core_var += (dmu * v) ** 2
        breakdown[lab.value] = breakdown.get(lab.value, 0.0) + mu * v
    core = math.fsum(core_parts)
    tally = sample_tally(geom, cuts, elements, integ.mc_samples, integ.seed, "collar", integ.workers)
    mean, sd, _, cmax = _moments(tally, evaluate)
    collar = mu_b * mean
    breakdown[RegionLabel.COLLAR.value] = collar
    bound = mu_b * (sup_bound if sup_bound is not None else cmax)
    return InducedValue(
        core + collar, math.sqrt(core_var + (mu_b * sd) ** 2), bound, "regions", tally.total,
        core_value=core, collar_value=collar, collar_max=cmax, region_breakdown=breakdown,
    )


def induce(
    c: Cochain,
    elements: Sequence[TransformationElement],
    integ: Integrator,
    geom: ModelGeometry,
    cuts: Optional[CutSystem] = None,
) -> InducedValue:
    """Ind'(gamma)(c)(g0, ..., gn) = integral of c(gamma(g0, x), ..., gamma(gn, x)) dmu(x)."""
    if len(elements) != c.degree + 1:
        raise ValueError(f"degree-{c.degree} cochain needs {c.degree + 1} elements")
    cuts = cuts or default_cuts(geom)
    evaluate = _evaluate_cochain(c)
    return _integrate(geom, cuts, list(elements), lambda ts: evaluate(ts), c.sup_bound, integ)


def induced_quasimorphism(
    q: Quasimorphism,
    g: TransformationElement,
    integ: Integrator,
    geom: ModelGeometry,
    powers: int = 4,
    cuts: Optional[CutSystem] = None,
) -> InducedValue:
    """Phi(g^powers)/powers with Phi(h) = integral of q(gamma(h, x)) dmu(x)."""
    if not q.homogeneous:
        raise ValueError("quasimorphism must be homogeneous")
    if powers < 4:
        raise ValueError("powers must be >= 4")
    cuts = cuts or default_cuts(geom)
    memo: dict = {}

    def evaluate(tuples):
        out = []
        for t in tuples:
            if t not in memo:
                memo[t] = q(t[0]) / powers
            out.append(memo[t])
        return out

    return _integrate(geom, cuts, [g**powers], evaluate, None, integ)


def core_closed_form(q: Quasimorphism, w: Word, geom: ModelGeometry) -> float:
    """mu(A) q(w) + mu(A^a) q(h_a w) + mu(A^b) q(h_b w)."""
    from bcoh.words import retract

    return math.fsum(
        [
            geom.region_measure(RegionLabel.CORE_BOTH) * q(w),
            geom.region_measure(RegionLabel.CORE_A_ONLY) * q(retract(w, "a")),
            geom.region_measure(RegionLabel.CORE_B_ONLY) * q(retract(w, "b")),
        ]
    )


def essential_image(
    g: TransformationElement,
    samples: int,
    seed: int,
    geom: ModelGeometry,
    cuts: Optional[CutSystem] = None,
    workers: Optional[int] = None,
) -> list[tuple[Word, float]]:
    """Distinct gamma(g, x) values over uniform samples, with empirical measures (summing to 1)."""
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    cuts = cuts or default_cuts(geom)
    tally = sample_tally(geom, cuts, [g], samples, seed, "domain", workers)
    freq: Counter = Counter()
    for _, (w,), c in tally.items():
        freq[w] += c
    return sorted(((w, c / tally.total) for w, c in freq.items()), key=lambda t: (-t[1], t[0]))
