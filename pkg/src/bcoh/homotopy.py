"""Reading based loops as words in F2, and the cocycle gamma(g, x).

Two cut rays run from the hole centers to the ambient circle.  A based loop
is read by its signed crossings of the rays (counterclockwise about the
hole center gives a or b, clockwise the inverse).  With the product
convention of :mod:`bcoh.words` the crossing sequence is written right to
left: the last crossing becomes the leftmost letter.

Straight chords from z are taken in the plane punctured at the two hole
centers, which is homotopy equivalent to the surface; a chord that clips a
hole is read as its push-off away from the center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from bcoh.eightmodel import (
    TWO_PI,
    GeometryError,
    ModelGeometry,
    RegionLabel,
    TransformationElement,
    classify_region,
    finger_profile,
    trajectory,
)
from bcoh.words import IDENTITY, Word, conjugate, reduce as reduce_word, retract

ORIENT_TOL = 1e-12
PERTURB_STEP = np.array([1e-9, 1.3e-9])
MAX_RETRIES = 8


class DegenerateLoopError(ArithmeticError):
    """A loop touches a cut ray tangentially or passes through a ray endpoint."""


class CollarError(ValueError):
    pass


@dataclass(frozen=True)
class CutSystem:
    origins: tuple[tuple[float, float], tuple[float, float]]
    directions: tuple[tuple[float, float], tuple[float, float]]
    lengths: tuple[float, float]

    def ray(self, i: int) -> tuple[np.ndarray, np.ndarray, float]:
        return np.array(self.origins[i]), np.array(self.directions[i]), self.lengths[i]

    def endpoint(self, i: int) -> np.ndarray:
        o, d, L = self.ray(i)
        return o + L * d


def default_cuts(geom: ModelGeometry) -> CutSystem:
    """Rays from each hole center pointing away from the other center, out to the ambient circle."""
    ca, cb = np.array(geom.c_alpha), np.array(geom.c_beta)
    e = (ca - cb) / np.linalg.norm(ca - cb)
    origins, dirs, lengths = [], [], []
    for o, d in ((ca, e), (cb, -e)):
        b = float(o @ d)
        t = -b + math.sqrt(b * b - (o @ o - geom.R**2))
        origins.append((float(o[0]), float(o[1])))
        dirs.append((float(d[0]), float(d[1])))
        lengths.append(float(t))
    cuts = CutSystem(tuple(origins), tuple(dirs), tuple(lengths))
    validate_cuts(geom, cuts)
    return cuts


def _orient(a, b, c) -> float:
    return float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def _dist_point_ray(p, o, d, L) -> float:
    t = min(max(float((p - o) @ d), 0.0), L)
    return float(np.linalg.norm(p - (o + t * d)))


def validate_cuts(geom: ModelGeometry, cuts: CutSystem) -> None:
    z = geom.z
    for i in (0, 1):
        o, d, L = cuts.ray(i)
        if _dist_point_ray(z, o, d, L) < 1e-6:
            raise GeometryError("cut ray passes through the basepoint")
        other = np.array(geom.c_beta if i == 0 else geom.c_alpha)
        if _dist_point_ray(other, o, d, L) <= geom.holes[1 - i]:
            raise GeometryError("cut ray meets the other hole")
    o0, e0 = cuts.ray(0)[0], cuts.endpoint(0)
    o1, e1 = cuts.ray(1)[0], cuts.endpoint(1)
    if _orient(o0, e0, o1) * _orient(o0, e0, e1) < 0 and _orient(o1, e1, o0) * _orient(o1, e1, e0) < 0:
        raise GeometryError("cut rays intersect")


# ------------------------------------------------------------------ tracer


def _segment_crossings(cuts: CutSystem, p, q) -> list[tuple[float, int]]:
    out = []
    for i in (0, 1):
        o, e = np.array(cuts.origins[i]), cuts.endpoint(i)
        o1, o2 = _orient(o, e, p), _orient(o, e, q)
        o3, o4 = _orient(p, q, o), _orient(p, q, e)
        straddle_line = o3 * o4 < 0 or abs(o3) < ORIENT_TOL or abs(o4) < ORIENT_TOL
        if straddle_line and (abs(o1) < ORIENT_TOL or abs(o2) < ORIENT_TOL):
            raise DegenerateLoopError("loop vertex on a cut ray")
        if o1 * o2 < 0 and (abs(o3) < ORIENT_TOL or abs(o4) < ORIENT_TOL):
            raise DegenerateLoopError("loop passes through a ray endpoint")
        if o1 * o2 < 0 and o3 * o4 < 0:
            sign = 1 if o2 > 0 else -1
            out.append((o1 / (o1 - o2), sign * (i + 1)))
    out.sort()
    return out


def crossing_sequence(cuts: CutSystem, loop: np.ndarray) -> list[int]:
    """Signed ray crossings of a polyline, in traversal order."""
    seq: list[int] = []
    for p, q in zip(loop[:-1], loop[1:]):
        if p[0] == q[0] and p[1] == q[1]:
            continue
        seq.extend(code for _, code in _segment_crossings(cuts, p, q))
    return seq


def loop_class(cuts: CutSystem, loop: np.ndarray) -> Word:
    """The F2 element of a closed polyline (first point = last point)."""
    loop = np.asarray(loop, dtype=float)
    if not np.array_equal(loop[0], loop[-1]):
        raise ValueError("loop is not closed")
    return reduce_word(reversed(crossing_sequence(cuts, loop)))


def based_loop(geom: ModelGeometry, g: TransformationElement, x, samples_per_letter: int = 32) -> np.ndarray:
    z = geom.z
    traj = trajectory(geom, g, x, samples_per_letter)
    return np.vstack([z, traj, z])


def gamma_detailed(
    geom: ModelGeometry,
    cuts: CutSystem,
    g: TransformationElement,
    x,
    samples_per_letter: int = 32,
) -> tuple[Word, int]:
    """gamma(g, x) and the number of deterministic perturbation steps used."""
    x = np.asarray(x, dtype=float)
    last: Optional[Exception] = None
    for k in range(MAX_RETRIES + 1):
        try:
            return loop_class(cuts, based_loop(geom, g, x + k * PERTURB_STEP, samples_per_letter)), k
        except DegenerateLoopError as exc:
            last = exc
    raise DegenerateLoopError(f"still degenerate after {MAX_RETRIES} perturbations: {last}")


def gamma(geom: ModelGeometry, cuts: CutSystem, g: TransformationElement, x, samples_per_letter: int = 32) -> Word:
    return gamma_detailed(geom, cuts, g, x, samples_per_letter)[0]


# ------------------------------------------------------- piecewise oracle


def _core_path(geom: ModelGeometry, cuts: CutSystem, x: np.ndarray, i: int, per_turn: int = 256) -> np.ndarray:
    """Path from x radially onto core i, then along the core to z without crossing ray i."""
    c, r, _ = geom.tube(i)
    z = geom.z
    vx = x - c
    phx = math.atan2(vx[1], vx[0])
    phz = math.atan2(z[1] - c[1], z[0] - c[0])
    o, d, _ = cuts.ray(i)
    psi = math.atan2(d[1], d[0])
    ccw = (phz - phx) % TWO_PI
    sweep = ccw if (psi - phx) % TWO_PI >= ccw else ccw - TWO_PI
    n = max(8, int(abs(sweep) / TWO_PI * per_turn))
    ang = phx + sweep * np.arange(n + 1) / n
    arc = np.stack([c[0] + r * np.cos(ang), c[1] + r * np.sin(ang)], -1)
    arc[-1] = z
    return np.vstack([x, arc])


def conjugator(geom: ModelGeometry, cuts: CutSystem, x, tube: int) -> Word:
    """u_x: class of the loop z -> (along core `tube`) -> x -> (chord) -> z."""
    x = np.asarray(x, dtype=float)
    path = _core_path(geom, cuts, x, tube)
    return loop_class(cuts, np.vstack([path[::-1], geom.z]))


_TABLE = {
    RegionLabel.CORE_BOTH: (0, None),
    RegionLabel.CORE_A_ONLY: (0, "a"),
    RegionLabel.CORE_B_ONLY: (1, "b"),
}


def piecewise_parts(geom: ModelGeometry, cuts: CutSystem, x) -> tuple[RegionLabel, Word]:
    """Region of x and its conjugator (identity for Outside)."""
    label = classify_region(geom, x)
    if label is RegionLabel.OUTSIDE:
        return label, IDENTITY
    if label is RegionLabel.COLLAR:
        raise CollarError("no closed form on the collar region")
    x = np.asarray(x, dtype=float)
    last = None
    for k in range(MAX_RETRIES + 1):
        try:
            return label, conjugator(geom, cuts, x + k * PERTURB_STEP, _TABLE[label][0])
        except DegenerateLoopError as exc:
            last = exc
    raise DegenerateLoopError(str(last))


def table_word(label: RegionLabel, u: Word, w: Word) -> Word:
    if label is RegionLabel.OUTSIDE:
        return IDENTITY
    onto = _TABLE[label][1]
    return conjugate(u, w if onto is None else retract(w, onto))


def gamma_piecewise(geom: ModelGeometry, cuts: CutSystem, w: Word, x) -> Word:
    """Closed-form gamma(rho_eps(w), x) off the collar: u w u^-1, u h_a(w) u^-1, u h_b(w) u^-1 or e."""
    label, u = piecewise_parts(geom, cuts, x)
    return table_word(label, u, w)


# --------------------------------------------------- vectorized exact arcs


BATCH_TOL = 1e-10


def _segment_events(cuts: CutSystem, p: np.ndarray, q: np.ndarray, piece: int, keys: list, codes: list, flag: np.ndarray) -> None:
    e = q - p
    for i in (0, 1):
        o, d, L = cuts.ray(i)
        den = e[:, 0] * d[1] - e[:, 1] * d[0]
        op = o - p
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (op[:, 0] * d[1] - op[:, 1] * d[0]) / den
            t = (op[:, 0] * e[:, 1] - op[:, 1] * e[:, 0]) / den
        hit = (den != 0) & (s > 0) & (s < 1) & (t > 0) & (t < L)
        tol = BATCH_TOL
        near_s = (np.abs(s) < tol) | (np.abs(s - 1) < tol)
        near_t = (np.abs(t) < tol) | (np.abs(t - L) < tol)
        in_s = (s > -tol) & (s < 1 + tol)
        in_t = (t > -tol) & (t < L + tol)
        flag |= (near_s & in_t) | (near_t & in_s) | ((np.abs(den) < tol) & (np.hypot(e[:, 0], e[:, 1]) > 0))
        code = np.where(den < 0, i + 1, -(i + 1)).astype(np.int8)
        keys.append(np.where(hit, piece + s, np.inf))
        codes.append(np.where(hit, code, 0).astype(np.int8))


def _arc_events(cuts, c, rho, phi0, theta, piece, keys, codes, flag) -> None:
    moving = theta != 0.0
    for i in (0, 1):
        o, d, L = cuts.ray(i)
        oc = o - c
        b = float(oc @ d)
        disc = b * b - (float(oc @ oc) - rho * rho)
        sq = np.sqrt(np.maximum(disc, 0.0))
        for root in (-b - sq, -b + sq):
            ok = moving & (disc > 0) & (root > 0) & (root < L)
            qx, qy = o[0] + root * d[0] - c[0], o[1] + root * d[1] - c[1]
            psi = np.arctan2(qy, qx)
            fwd = theta > 0
            delta = np.where(fwd, (psi - phi0) % TWO_PI, (phi0 - psi) % TWO_PI)
            span = np.abs(theta)
            hit = ok & (delta > 0) & (delta < span)
            tol = BATCH_TOL
            near = (np.abs(delta) < tol) | (np.abs(TWO_PI - delta) < tol) | (np.abs(delta - span) < tol)
            flag |= moving & (disc > -tol) & (root > -tol) & (root < L + tol) & (
                near | (np.abs(disc) < tol) | (np.abs(root) < tol) | (np.abs(root - L) < tol)
            )
            tx, ty = -np.sin(psi) * np.sign(theta), np.cos(psi) * np.sign(theta)
            cr = d[0] * ty - d[1] * tx
            code = np.where(cr > 0, i + 1, -(i + 1)).astype(np.int8)
            with np.errstate(divide="ignore", invalid="ignore"):
                frac = delta / span
            keys.append(np.where(hit, piece + frac, np.inf))
            codes.append(np.where(hit, code, 0).astype(np.int8))


def _reduce_rows(letters: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, m = letters.shape
    stack = np.zeros((n, m), dtype=np.int8)
    sp = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    for j in range(m):
        lj = letters[:, j]
        nz = lj != 0
        top = stack[rows, np.maximum(sp - 1, 0)]
        cancel = nz & (sp > 0) & (top == -lj)
        push = nz & ~cancel
        sp[cancel] -= 1
        stack[rows[push], sp[push]] = lj[push]
        sp[push] += 1
    return stack, sp


def gamma_batch(geom: ModelGeometry, cuts: CutSystem, g: TransformationElement, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """gamma(g, x) for many x with exact arcs.

    Returns (words, lengths): row r holds the reduced word's letter codes in
    product order, zero-padded.  Rows whose loop comes within rounding of a
    degenerate position are recomputed with the perturbing tracer.
    """
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    flag = np.zeros(n, dtype=bool)
    z = geom.z
    keys: list[np.ndarray] = []
    codes: list[np.ndarray] = []
    _segment_events(cuts, np.broadcast_to(z, pts.shape), pts, 0, keys, codes, flag)
    cur = pts
    piece = 1
    eps = geom.epsilon
    for code in reversed(g.letters):
        c, r, w = geom.tube(abs(code) - 1)
        dx, dy = cur[:, 0] - c[0], cur[:, 1] - c[1]
        rho = np.hypot(dx, dy)
        s = np.abs(rho - r) / w
        f = np.where(s < 1.0, finger_profile(np.minimum(s, 1.0), eps), 0.0)
        theta = np.sign(code) * TWO_PI * f
        phi0 = np.arctan2(dy, dx)
        _arc_events(cuts, c, rho, phi0, theta, piece, keys, codes, flag)
        move = (f > 0) & (f < 1.0)
        nxt = cur.copy()
        if move.any():
            ct, st = np.cos(theta[move]), np.sin(theta[move])
            nxt[move, 0] = c[0] + ct * dx[move] - st * dy[move]
            nxt[move, 1] = c[1] + st * dx[move] + ct * dy[move]
        cur = nxt
        piece += 1
    _segment_events(cuts, cur, np.broadcast_to(z, cur.shape), piece, keys, codes, flag)
    K = np.stack(keys, axis=1)
    C = np.stack(codes, axis=1)
    order = np.argsort(K, axis=1, kind="stable")
    seq = np.take_along_axis(C, order, axis=1)
    stack, sp = _reduce_rows(seq)
    m = stack.shape[1]
    idx = sp[:, None] - 1 - np.arange(m)[None, :]
    out = np.where(idx >= 0, np.take_along_axis(stack, np.maximum(idx, 0), axis=1), 0).astype(np.int8)
    for r in np.flatnonzero(flag):
        w = gamma(geom, cuts, g, pts[r])
        if len(w) > out.shape[1]:
            out = np.pad(out, ((0, 0), (0, len(w) - out.shape[1])))
        out[r] = 0
        out[r, : len(w)] = w.letters
        sp[r] = len(w)
    return out, sp


def decode_row(row: np.ndarray) -> Word:
    return Word(tuple(int(c) for c in row if c != 0))
