"""Hyperbolic 3-space: Klein-ball points, Lorentz isometries, simplex volumes.

Isometries are 4x4 matrices preserving the form diag(-1, 1, 1, 1) on the
upper sheet of the hyperboloid.  Points carry their hyperboloid lift so
that 1 - |x|^2 = 1/t^2 stays accurate near the sphere at infinity.

Volumes.  In the Klein model a geodesic simplex is a Euclidean simplex and
the hyperbolic volume element is (1 - |x|^2)^-2 dx.  The signed volume is
split into four signed cones from the origin,

    [v0 v1 v2 v3] = [O v1 v2 v3] - [O v0 v2 v3] + [O v0 v1 v3] - [O v0 v1 v2],

and along each ray from the origin the density integrates in closed form,
so every cone reduces to a smooth 2-D integral over its face triangle.
Faces are evaluated in a canonical vertex order, which makes the
alternating sum over the five faces of a 4-simplex cancel to rounding.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from bcoh.cochains import Cochain
from bcoh.words import Word, invert

LORENTZ = np.diag([-1.0, 1.0, 1.0, 1.0])

# 2 * Lobachevsky(pi/6): volume of the regular ideal tetrahedron, the sup of
# all geodesic simplex volumes in H^3
REGULAR_IDEAL_VOLUME = 1.0149416064096536

DEFAULT_TOL = 1e-6


class NumericFailure(ArithmeticError):
    """A point left the open ball (to working precision)."""


class QuadratureError(ArithmeticError):
    def __init__(self, msg: str, achieved: float):
        super().__init__(f"{msg} (achieved error {achieved:.3e})")
        self.achieved = achieved


@dataclass(frozen=True)
class KleinPoint:
    coords: tuple[float, float, float]
    # hyperboloid lift (t, x1, x2, x3); derived from coords when omitted
    lift: Optional[tuple[float, float, float, float]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        k = np.asarray(self.coords, dtype=float)
        if k.shape != (3,):
            raise ValueError("KleinPoint needs three coordinates")
        s = float(k @ k)
        if not s < 1.0:
            raise ValueError(f"point {self.coords} is not inside the unit ball")
        object.__setattr__(self, "coords", tuple(float(c) for c in k))
        if self.lift is None:
            t = 1.0 / math.sqrt(1.0 - s)
            object.__setattr__(self, "lift", (t, *(t * k)))

    @classmethod
    def from_hyperboloid(cls, v: np.ndarray) -> "KleinPoint":
        t = float(v[0])
        if t <= 0:
            raise NumericFailure("vector is not on the upper sheet")
        k = np.asarray(v[1:], dtype=float) / t
        # |k| >= 1 - 1e-14  <=>  1/t^2 <= ~2e-14
        if 1.0 / (t * t) <= 2e-14:
            raise NumericFailure(f"image at Klein radius >= 1 - 1e-14 (t = {t:.3e})")
        return cls(tuple(k), tuple(float(x) for x in v))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords)

    @property
    def one_minus_sq(self) -> float:
        """1 - |x|^2, computed from the lift."""
        t = self.lift[0]
        return 1.0 / (t * t)


ORIGIN = KleinPoint((0.0, 0.0, 0.0))


def lorentz_inner(u: np.ndarray, v: np.ndarray) -> float:
    return float(-u[0] * v[0] + u[1] * v[1] + u[2] * v[2] + u[3] * v[3])


def distance(p: KleinPoint, q: KleinPoint) -> float:
    c = -lorentz_inner(np.array(p.lift), np.array(q.lift))
    return math.acosh(max(c, 1.0))


@dataclass(frozen=True)
class Isometry:
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise ValueError("isometry matrix must be 4x4")
        object.__setattr__(self, "matrix", m)

    def check(self, tol: float = 1e-12) -> None:
        m = self.matrix
        scale = max(1.0, float(np.abs(m).max()) ** 2)
        if not np.allclose(m.T @ LORENTZ @ m, LORENTZ, atol=tol * scale, rtol=0):
            raise ValueError("matrix does not preserve the Lorentz form")
        if np.linalg.det(m) <= 0 or m[0, 0] <= 0:
            raise ValueError("isometry must preserve orientation and the upper sheet")

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        return Isometry(LORENTZ @ self.matrix.T @ LORENTZ)


IDENTITY_ISO = Isometry(np.eye(4))


def boost(axis: int, length: float) -> np.ndarray:
    """Translation by `length` along the geodesic through the origin in coordinate direction axis (1..3)."""
    m = np.eye(4)
    ch, sh = math.cosh(length), math.sinh(length)
    m[0, 0] = m[axis, axis] = ch
    m[0, axis] = m[axis, 0] = sh
    return m


def rotation(i: int, j: int, angle: float) -> np.ndarray:
    m = np.eye(4)
    c, s = math.cos(angle), math.sin(angle)
    m[i, i] = m[j, j] = c
    m[i, j], m[j, i] = -s, s
    return m


def apply(iso: Isometry, p: KleinPoint) -> KleinPoint:
    return KleinPoint.from_hyperboloid(iso.matrix @ np.array(p.lift))


class GroupAction:
    """Homomorphism F2 -> Isom+(H^3) given by the images of a and b."""

    def __init__(self, gen_a: Isometry, gen_b: Isometry, params: Optional[dict] = None):
        gen_a.check()
        gen_b.check()
        self.gen_a, self.gen_b = gen_a, gen_b
        self.params = dict(params or {})
        self._letters = {
            1: gen_a.matrix,
            -1: gen_a.inverse().matrix,
            2: gen_b.matrix,
            -2: gen_b.inverse().matrix,
        }
        self._memo: dict[tuple[int, ...], np.ndarray] = {(): np.eye(4)}
        self._lock = threading.Lock()

    def _matrix(self, letters: tuple[int, ...]) -> np.ndarray:
        with self._lock:
            m = self._memo.get(letters)
        if m is not None:
            return m
        m = self._matrix(letters[:-1]) @ self._letters[letters[-1]]
        with self._lock:
            self._memo[letters] = m
        return m

    def matrix(self, w: Word) -> np.ndarray:
        return self._matrix(w.letters)

    def isometry(self, w: Word) -> Isometry:
        return Isometry(self.matrix(w))

    def orbit_point(self, w: Word, basepoint: KleinPoint = ORIGIN) -> KleinPoint:
        return KleinPoint.from_hyperboloid(self.matrix(w) @ np.array(basepoint.lift))


def loxodromic_pair(
    translation_length: float = 1.0, rotation_angle: float = 0.7, axis_separation: float = 1.0
) -> GroupAction:
    """Two loxodromics with orthogonal axes at distance ``axis_separation``.

    a translates along the x1-axis through the origin and rotates about it;
    b does the same along a geodesic parallel to x2 pushed out along x3.
    """
    if not translation_length > 0:
        raise ValueError("translation_length must be positive")
    a = boost(1, translation_length) @ rotation(2, 3, rotation_angle)
    b0 = boost(2, translation_length) @ rotation(3, 1, rotation_angle)
    c = boost(3, axis_separation)
    b = c @ b0 @ np.linalg.inv(c)
    params = dict(
        translation_length=translation_length,
        rotation_angle=rotation_angle,
        axis_separation=axis_separation,
    )
    return GroupAction(Isometry(a), Isometry(b), params)


# ---------------------------------------------------------------- quadrature


def _conical_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    pts = np.stack([u * (1 - v), u * v], axis=-1).reshape(-1, 2)
    wts = (wu * wv * u).reshape(-1)
    return pts, wts


_RULE_PTS, _RULE_WTS = _conical_rule(7)

_SERIES_K = np.arange(1, 31, dtype=float)


def _radial_kernel(tsq: np.ndarray, om: np.ndarray) -> np.ndarray:
    """F(T)/T^3 with F(T) = int_0^T r^2 (1-r^2)^-2 dr, T^2 = tsq, om = 1 - T^2."""
    out = np.empty_like(tsq)
    small = tsq < 0.0625
    if small.any():
        ts = tsq[small]
        # sum_k k T^(2k-2) / (2k+1), Horner in T^2
        acc = np.zeros_like(ts)
        for k in _SERIES_K[::-1]:
            acc = acc * ts + k / (2 * k + 1)
        out[small] = acc
    big = ~small
    if big.any():
        t = np.sqrt(tsq[big])
        o = om[big]
        f = t / (2.0 * o) - 0.25 * np.log((1.0 + t) ** 2 / o)
        out[big] = f / (t * tsq[big])
    return out


def _face_rule_chunk(tris: np.ndarray, fidx: np.ndarray, kf: np.ndarray, gf: np.ndarray) -> np.ndarray:
    """Apply the conical rule on parameter triangles `tris` (m,3,2) of faces fidx."""
    p0 = tris[:, 0, :]
    e1 = tris[:, 1, :] - p0
    e2 = tris[:, 2, :] - p0
    area2 = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    st = p0[:, None, :] + _RULE_PTS[None, :, 0, None] * e1[:, None, :] + _RULE_PTS[None, :, 1, None] * e2[:, None, :]
    lam = np.stack([1.0 - st[..., 0] - st[..., 1], st[..., 0], st[..., 1]], axis=-1)
    k = kf[fidx]
    y = np.einsum("mqi,mij->mqj", lam, k)
    tsq = np.einsum("mqj,mqj->mq", y, y)
    om = np.einsum("mqi,mij,mqj->mq", lam, gf[fidx], lam)
    vals = _radial_kernel(tsq.ravel(), om.ravel()).reshape(tsq.shape)
    return area2 * (vals @ _RULE_WTS)


_CHUNK = 8192


def _face_rule(tris: np.ndarray, fidx: np.ndarray, kf: np.ndarray, gf: np.ndarray) -> np.ndarray:
    if len(tris) <= _CHUNK:
        return _face_rule_chunk(tris, fidx, kf, gf)
    return np.concatenate(
        [_face_rule_chunk(tris[i : i + _CHUNK], fidx[i : i + _CHUNK], kf, gf) for i in range(0, len(tris), _CHUNK)]
    )


def _split(tris: np.ndarray) -> np.ndarray:
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    kids = np.stack(
        [
            np.stack([a, ab, ca], 1),
            np.stack([ab, b, bc], 1),
            np.stack([ca, bc, c], 1),
            np.stack([bc, ca, ab], 1),
        ],
        1,
    )
    return kids.reshape(-1, 3, 2)


def _refine(tris, fidx, kf, gf):
    """Fine estimate (sum over the four children) and error estimate for each leaf."""
    coarse = _face_rule(tris, fidx, kf, gf)
    fine = _face_rule(_split(tris), np.repeat(fidx, 4), kf, gf).reshape(-1, 4).sum(axis=1)
    return fine, np.abs(coarse - fine)


def cone_integrals(
    faces: Sequence[Sequence[KleinPoint]],
    tols: Sequence[float],
    max_iter: int = 400,
    max_leaves: int = 200_000,
) -> tuple[np.ndarray, np.ndarray]:
    """For each face (a, b, c) return J with cone volume = |det(a,b,c)| * J, and its error bound.

    Globally adaptive per face: leaves carrying at least a quarter of the
    face's largest leaf error are split until the summed error meets the
    face tolerance.  When the leaf budget runs out the achieved error is
    returned as is.
    """
    nf = len(faces)
    if nf == 0:
        return np.zeros(0), np.zeros(0)
    kf = np.array([[p.coords for p in f] for f in faces], dtype=float)
    gf = 1.0 - np.einsum("fij,fkj->fik", kf, kf)
    for f, face in enumerate(faces):
        for i, p in enumerate(face):
            gf[f, i, i] = p.one_minus_sq
    tols = np.asarray(tols, dtype=float)
    root = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    tris = np.repeat(root[None], nf, axis=0)
    fidx = np.arange(nf)
    val, err = _refine(tris, fidx, kf, gf)
    total = np.zeros(nf)
    total_err = np.zeros(nf)
    for it in range(max_iter):
        face_err = np.bincount(fidx, err, nf)
        done = (face_err <= tols)[fidx]
        if it == max_iter - 1 or len(tris) > max_leaves:
            done[:] = True
        if done.any():
            total += np.bincount(fidx[done], val[done], nf)
            total_err += np.bincount(fidx[done], err[done], nf)
            tris, fidx, val, err = tris[~done], fidx[~done], val[~done], err[~done]
        if len(tris) == 0:
            break
        worst = np.zeros(nf)
        np.maximum.at(worst, fidx, err)
        mark = err >= 0.25 * worst[fidx]
        kids = _split(tris[mark])
        kidx = np.repeat(fidx[mark], 4)
        kval, kerr = _refine(kids, kidx, kf, gf)
        keep = ~mark
        tris = np.concatenate([tris[keep], kids])
        fidx = np.concatenate([fidx[keep], kidx])
        val = np.concatenate([val[keep], kval])
        err = np.concatenate([err[keep], kerr])
    return total, total_err


def _det3(a, b, c) -> float:
    return float(np.linalg.det(np.array([a, b, c])))


def _orientation_det(vs: Sequence[KleinPoint]) -> float:
    v = np.array([p.coords for p in vs])
    return float(np.linalg.det(v[1:] - v[0]))


def _canonical(face: Sequence[KleinPoint], keys: Sequence) -> tuple[KleinPoint, ...]:
    order = sorted(range(3), key=lambda i: keys[i])
    return tuple(face[i] for i in order)


def simplex_volume_estimate(vertices: Sequence[KleinPoint], tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Signed volume of the geodesic simplex and an error bound."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if len(vertices) != 4:
        raise ValueError("need four vertices")
    if _orientation_det(vertices) == 0.0:
        return 0.0, 0.0
    faces, dets = [], []
    for i in range(4):
        face = [vertices[j] for j in range(4) if j != i]
        faces.append(_canonical(face, [p.coords for p in face]))
        dets.append(_det3(*(p.coords for p in face)))
    return _assemble(faces, dets, tol)


def _assemble(faces, dets, tol) -> tuple[float, float]:
    tols = [tol / (4.0 * max(abs(d), 1e-300)) for d in dets]
    todo = [i for i, d in enumerate(dets) if d != 0.0]
    js = np.zeros(4)
    errs = np.zeros(4)
    if todo:
        j, e = cone_integrals([faces[i] for i in todo], [tols[i] for i in todo])
        js[todo], errs[todo] = j, e
    terms = [(-1) ** i * dets[i] * js[i] for i in range(4)]
    return math.fsum(terms), float(sum(abs(dets[i]) * errs[i] for i in range(4)))


def simplex_signed_volume(v0: KleinPoint, v1: KleinPoint, v2: KleinPoint, v3: KleinPoint, tol: float = DEFAULT_TOL) -> float:
    value, err = simplex_volume_estimate((v0, v1, v2, v3), tol)
    if err > tol:
        raise QuadratureError("simplex volume did not converge", err)
    return value


class _VolumeFn:
    """Callable behind the volume cocycle; caches cone integrals per face (as word triples)."""

    def __init__(self, action: GroupAction, basepoint: KleinPoint, tol: float):
        self.action, self.basepoint, self.tol = action, basepoint, tol
        self._points: dict[Word, KleinPoint] = {}
        self._faces: dict[tuple[Word, Word, Word], tuple[float, float]] = {}
        self._lock = threading.Lock()
        self.last_error = 0.0

    def point(self, w: Word) -> KleinPoint:
        with self._lock:
            p = self._points.get(w)
        if p is None:
            p = self.action.orbit_point(invert(w), self.basepoint)
            with self._lock:
                self._points[w] = p
        return p

    def eval_with_error(self, tuples: Sequence[Sequence[Word]]) -> list[tuple[float, float]]:
        plans = []
        missing: dict[tuple[Word, Word, Word], tuple[KleinPoint, ...]] = {}
        missing_tol: dict[tuple[Word, Word, Word], float] = {}
        for words in tuples:
            pts = [self.point(w) for w in words]
            if len(set(words)) < 4 or _orientation_det(pts) == 0.0:
                plans.append(None)
                continue
            plan = []
            for i in range(4):
                fw = [words[j] for j in range(4) if j != i]
                fp = [pts[j] for j in range(4) if j != i]
                key = tuple(sorted(fw))
                det = _det3(*(p.coords for p in fp))
                plan.append((key, det))
                if det != 0.0 and key not in self._faces and key not in missing:
                    missing[key] = tuple(self.point(w) for w in key)
                    missing_tol[key] = self.tol / (4.0 * abs(det))
            plans.append(plan)
        if missing:
            keys = list(missing)
            js, es = cone_integrals([missing[k] for k in keys], [missing_tol[k] for k in keys])
            with self._lock:
                for k, j, e in zip(keys, js, es):
                    self._faces[k] = (float(j), float(e))
        out = []
        for plan in plans:
            if plan is None:
                out.append((0.0, 0.0))
                continue
            terms, err = [], 0.0
            for i, (key, det) in enumerate(plan):
                if det == 0.0:
                    continue
                j, e = self._faces[key]
                terms.append((-1) ** i * det * j)
                err += abs(det) * e
            out.append((math.fsum(terms), err))
        return out

    def eval_many(self, tuples):
        res = self.eval_with_error(tuples)
        self.last_error = max([e for _, e in res], default=0.0)
        return [v for v, _ in res]

    def __call__(self, *words: Word) -> float:
        return self.eval_many([words])[0]


def volume_cocycle(action: GroupAction, basepoint: KleinPoint = ORIGIN, tol: float = DEFAULT_TOL) -> Cochain:
    """vol(a1..a4) = signed volume of the simplex on rho(a_i^-1) x (right-invariant form)."""
    fn = _VolumeFn(action, basepoint, tol)
    return Cochain(3, fn, REGULAR_IDEAL_VOLUME, "vol3")


def lobachevsky(theta: float, terms: int = 1_000_000) -> float:
    """Lobachevsky function via 1/2 sum sin(2 n theta)/n^2, truncated."""
    n = np.arange(1, terms + 1, dtype=float)
    return 0.5 * float(np.sum(np.sin(2.0 * n * theta) / (n * n)))
