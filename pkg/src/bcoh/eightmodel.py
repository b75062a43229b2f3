"""The model surface: a closed disk minus two small disks, pi_1 = F2.

Two circular cores (center c_i, radius r_i) cross at the basepoint z and at
one other point.  Each core carries an annular tube of half-width w_i; the
finger-pushing map for a tube rotates the circle at normalized radial
offset s = |dist - r| / w by the angle 2*pi*f(s).  Rotations of circles are
area preserving, so every element acts by an exact Lebesgue-measure
preserving bijection, supported in the tubes.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from bcoh.words import Word, parse_word, reduce as reduce_word

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    pass


class RegionLabel(str, Enum):
    OUTSIDE = "Outside"
    CORE_BOTH = "CoreBoth"
    CORE_A_ONLY = "CoreAOnly"
    CORE_B_ONLY = "CoreBOnly"
    COLLAR = "Collar"


LABELS = tuple(RegionLabel)
_LABEL_CODE = {lab: i for i, lab in enumerate(LABELS)}


def finger_profile(t, epsilon: float):
    """f = 1 on [0, 1-eps], then 1 - smoothstep down to f(1) = 0 (C^1, decreasing)."""
    t = np.asarray(t, dtype=float)
    u = np.clip((t - (1.0 - epsilon)) / epsilon, 0.0, 1.0)
    out = 1.0 - u * u * (3.0 - 2.0 * u)
    return float(out) if out.ndim == 0 else out


def _lens(a: float, b: float, d: float) -> float:
    """Area of the intersection of disks of radii a, b at center distance d."""
    if a <= 0 or b <= 0 or d >= a + b:
        return 0.0
    if d <= abs(a - b):
        return math.pi * min(a, b) ** 2
    x = (d * d + a * a - b * b) / (2 * d * a)
    y = (d * d + b * b - a * a) / (2 * d * b)
    k = (-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b)
    return a * a * math.acos(x) + b * b * math.acos(y) - 0.5 * math.sqrt(max(k, 0.0))


def _annulus_overlap(ra: tuple[float, float], rb: tuple[float, float], d: float) -> float:
    (a0, a1), (b0, b1) = ra, rb
    return _lens(a1, b1, d) - _lens(a1, b0, d) - _lens(a0, b1, d) + _lens(a0, b0, d)


def _annulus_area(r: tuple[float, float]) -> float:
    return math.pi * (r[1] ** 2 - r[0] ** 2)


@dataclass(frozen=True)
class ModelGeometry:
    R: float = 6.0
    c_alpha: tuple[float, float] = (-1.0, 0.0)
    c_beta: tuple[float, float] = (1.0, 0.0)
    r_alpha: float = math.sqrt(2.0)
    r_beta: float = math.sqrt(2.0)
    w_alpha: float = 0.25
    w_beta: float = 0.25
    epsilon: float = 0.2
    hole_alpha: float = 0.2
    hole_beta: float = 0.2
    measures: dict = field(default=None, init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "c_alpha", tuple(float(v) for v in self.c_alpha))
        object.__setattr__(self, "c_beta", tuple(float(v) for v in self.c_beta))
        self._validate()
        object.__setattr__(self, "measures", self._compute_measures())

    # -- construction helpers

    @classmethod
    def from_dict(cls, d: dict) -> "ModelGeometry":
        known = {f for f in cls.__dataclass_fields__ if f != "measures"}
        extra = set(d) - known
        if extra:
            raise GeometryError(f"unknown geometry keys: {sorted(extra)}")
        return cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()})

    @classmethod
    def from_json(cls, path: str | Path) -> "ModelGeometry":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("measures")
        d["c_alpha"], d["c_beta"] = list(self.c_alpha), list(self.c_beta)
        return d

    def with_epsilon(self, epsilon: float) -> "ModelGeometry":
        return replace(self, epsilon=epsilon)

    # -- derived quantities

    def tube(self, i: int) -> tuple[np.ndarray, float, float]:
        if i == 0:
            return np.array(self.c_alpha), self.r_alpha, self.w_alpha
        return np.array(self.c_beta), self.r_beta, self.w_beta

    @property
    def centers(self) -> np.ndarray:
        return np.array([self.c_alpha, self.c_beta])

    @property
    def holes(self) -> tuple[float, float]:
        return (self.hole_alpha, self.hole_beta)

    @property
    def center_distance(self) -> float:
        return math.dist(self.c_alpha, self.c_beta)

    def core_intersections(self) -> tuple[np.ndarray, np.ndarray]:
        """The two crossing points of the cores; the first (left of c_alpha -> c_beta) is z."""
        ca, cb = np.array(self.c_alpha), np.array(self.c_beta)
        d = self.center_distance
        ra, rb = self.r_alpha, self.r_beta
        x = (d * d + ra * ra - rb * rb) / (2 * d)
        h = math.sqrt(max(ra * ra - x * x, 0.0))
        e = (cb - ca) / d
        n = np.array([-e[1], e[0]])
        return ca + x * e + h * n, ca + x * e - h * n

    @property
    def z(self) -> np.ndarray:
        return self.core_intersections()[0]

    @property
    def area(self) -> float:
        return math.pi * (self.R**2 - self.hole_alpha**2 - self.hole_beta**2)

    def _radii(self, i: int, core: bool) -> tuple[float, float]:
        _, r, w = self.tube(i)
        k = (1.0 - self.epsilon) if core else 1.0
        return (r - k * w, r + k * w)

    # -- validation

    def _validate(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise GeometryError("epsilon must lie in (0, 1)")
        d = self.center_distance
        holes = self.holes
        for i in (0, 1):
            c, r, w = self.tube(i)
            if not (w > 0 and r > w and holes[i] > 0):
                raise GeometryError("need 0 < w < r and positive hole radii")
            if np.hypot(*c) + r + w >= self.R:
                raise GeometryError("tube leaves the ambient disk")
            if holes[i] >= r - w:
                raise GeometryError("hole meets its own tube")
            # the other hole sits strictly outside this tube's outer circle
            if d - holes[1 - i] <= r + w:
                raise GeometryError("tube meets (or encloses) the other hole")
            if np.hypot(*c) + holes[i] >= self.R:
                raise GeometryError("hole leaves the ambient disk")
        if d <= holes[0] + holes[1]:
            raise GeometryError("holes overlap")
        if not abs(self.r_alpha - self.r_beta) < d < self.r_alpha + self.r_beta:
            raise GeometryError("core circles must cross at two points")
        self._validate_overlap_locality()

    def _validate_overlap_locality(self) -> None:
        p1, p2 = self.core_intersections()
        lim = 3.0 * max(self.w_alpha, self.w_beta)
        c0, r0, w0 = self.tube(0)
        th = np.linspace(0.0, TWO_PI, 2881)
        rr = np.linspace(r0 - w0, r0 + w0, 41)
        T, Rr = np.meshgrid(th, rr)
        pts = np.stack([c0[0] + Rr * np.cos(T), c0[1] + Rr * np.sin(T)], -1).reshape(-1, 2)
        c1, r1, w1 = self.tube(1)
        inside = np.abs(np.hypot(*(pts - c1).T) - r1) <= w1
        q = pts[inside]
        near = (np.hypot(*(q - p1).T) <= lim) | (np.hypot(*(q - p2).T) <= lim)
        if not near.all():
            raise GeometryError("tube overlap escapes the crossing neighborhoods")

    # -- region measures (closed form via disk-lens areas)

    def _compute_measures(self) -> dict:
        d = self.center_distance
        na, nb = self._radii(0, False), self._radii(1, False)
        aa, ab = self._radii(0, True), self._radii(1, True)
        union = _annulus_area(na) + _annulus_area(nb) - _annulus_overlap(na, nb, d)
        both = _annulus_overlap(aa, ab, d)
        a_only = _annulus_area(aa) - _annulus_overlap(aa, nb, d)
        b_only = _annulus_area(ab) - _annulus_overlap(na, ab, d)
        return {
            RegionLabel.OUTSIDE: self.area - union,
            RegionLabel.CORE_BOTH: both,
            RegionLabel.CORE_A_ONLY: a_only,
            RegionLabel.CORE_B_ONLY: b_only,
            RegionLabel.COLLAR: union - both - a_only - b_only,
            "tube_overlap": _annulus_overlap(na, nb, d),
            "tubes": union,
        }

    def region_measure(self, label: RegionLabel | str) -> float:
        return self.measures[RegionLabel(label)]

    def collar_bands(self) -> list[tuple[np.ndarray, float, float]]:
        """The four thin annuli whose union is the collar region."""
        out = []
        for i in (0, 1):
            c, r, w = self.tube(i)
            k = 1.0 - self.epsilon
            out.append((c, r - w, r - k * w))
            out.append((c, r + k * w, r + w))
        return out

    def in_domain(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        ok = np.hypot(pts[:, 0], pts[:, 1]) <= self.R
        for i in (0, 1):
            c, _, _ = self.tube(i)
            ok &= np.hypot(*(pts - c).T) > self.holes[i]
        return ok


DEFAULT_GEOMETRY = ModelGeometry()


def region_measure(geom: ModelGeometry, label: RegionLabel | str) -> float:
    return geom.region_measure(label)


def radial_offsets(geom: ModelGeometry, pts: np.ndarray) -> np.ndarray:
    """Normalized radial coordinates s_alpha, s_beta, shape (n, 2)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.empty((len(pts), 2))
    for i in (0, 1):
        c, r, w = geom.tube(i)
        out[:, i] = np.abs(np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) - r) / w
    return out


def classify_many(geom: ModelGeometry, pts: np.ndarray) -> np.ndarray:
    """Region codes (indices into LABELS) for an array of points."""
    s = radial_offsets(geom, pts)
    k = 1.0 - geom.epsilon
    in_n = s <= 1.0
    in_a = s <= k
    out = np.full(len(s), _LABEL_CODE[RegionLabel.OUTSIDE], dtype=np.int8)
    out[in_n[:, 0] | in_n[:, 1]] = _LABEL_CODE[RegionLabel.COLLAR]
    out[in_a[:, 0] & ~in_n[:, 1]] = _LABEL_CODE[RegionLabel.CORE_A_ONLY]
    out[in_a[:, 1] & ~in_n[:, 0]] = _LABEL_CODE[RegionLabel.CORE_B_ONLY]
    out[in_a[:, 0] & in_a[:, 1]] = _LABEL_CODE[RegionLabel.CORE_BOTH]
    return out


def classify_region(geom: ModelGeometry, p) -> RegionLabel:
    return LABELS[int(classify_many(geom, np.asarray(p, dtype=float)[None, :])[0])]


# ---------------------------------------------------------------- elements


@dataclass(frozen=True)
class TransformationElement:
    """A composition of push letters; codes as in words (1 = push along alpha, -2 = push along beta inverted).

    As a map the letters compose right to left: "ab" applies b first.
    """

    letters: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(c) for c in self.letters))
        if any(c not in (1, -1, 2, -2) for c in self.letters):
            raise ValueError(f"invalid push letters {self.letters}")

    @classmethod
    def parse(cls, text: str) -> "TransformationElement":
        text = text.strip()
        if text in ("e", ""):
            return cls(())
        table = {"a": 1, "A": -1, "b": 2, "B": -2}
        try:
            return cls(tuple(table[ch] for ch in text))
        except KeyError as exc:
            raise ValueError(f"invalid character {exc.args[0]!r} in element {text!r}") from None

    @classmethod
    def rho(cls, w: Word | str) -> "TransformationElement":
        """The element rho_eps(w) (generators map to push letters)."""
        if isinstance(w, str):
            w = parse_word(w)
        return cls(w.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "TransformationElement") -> "TransformationElement":
        return TransformationElement(self.letters + other.letters)

    def __pow__(self, n: int) -> "TransformationElement":
        if n < 0:
            return self.inverse() ** (-n)
        return TransformationElement(self.letters * n)

    def inverse(self) -> "TransformationElement":
        return TransformationElement(tuple(-c for c in reversed(self.letters)))

    @property
    def word(self) -> Word:
        return reduce_word(self.letters)

    def text(self) -> str:
        return "".join({1: "a", -1: "A", 2: "b", -2: "B"}[c] for c in self.letters)

    def __str__(self) -> str:
        return self.text() or "e"


def rotation_angle(geom: ModelGeometry, code: int, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed rotation angles of letter `code` at pts, and the full-turn mask."""
    i = abs(code) - 1
    c, r, w = geom.tube(i)
    s = np.abs(np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) - r) / w
    f = np.where(s < 1.0, finger_profile(np.minimum(s, 1.0), geom.epsilon), 0.0)
    full = f == 1.0
    return np.sign(code) * TWO_PI * f, full


def apply_letter_many(geom: ModelGeometry, code: int, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    theta, full = rotation_angle(geom, code, pts)
    c, _, _ = geom.tube(abs(code) - 1)
    move = (theta != 0.0) & ~full
    out = pts.copy()
    if move.any():
        d = pts[move] - c
        ct, st = np.cos(theta[move]), np.sin(theta[move])
        out[move, 0] = c[0] + ct * d[:, 0] - st * d[:, 1]
        out[move, 1] = c[1] + st * d[:, 0] + ct * d[:, 1]
    return out


def apply_letter(geom: ModelGeometry, code: int, p) -> np.ndarray:
    return apply_letter_many(geom, code, np.asarray(p, dtype=float)[None, :])[0]


def apply_many(geom: ModelGeometry, g: TransformationElement, pts: np.ndarray) -> np.ndarray:
    out = np.asarray(pts, dtype=float)
    for code in reversed(g.letters):
        out = apply_letter_many(geom, code, out)
    return out


def apply(geom: ModelGeometry, g: TransformationElement, p) -> np.ndarray:
    return apply_many(geom, g, np.asarray(p, dtype=float)[None, :])[0]


def trajectory(geom: ModelGeometry, g: TransformationElement, p, samples_per_letter: int = 32) -> np.ndarray:
    """Sampled isotopy path of p: one circular arc (possibly constant) per letter."""
    if samples_per_letter < 8:
        raise ValueError("samples_per_letter must be >= 8")
    cur = np.asarray(p, dtype=float)
    path = [cur]
    frac = np.arange(1, samples_per_letter + 1) / samples_per_letter
    for code in reversed(g.letters):
        theta, _ = rotation_angle(geom, code, cur[None, :])
        nxt = apply_letter(geom, code, cur)
        if theta[0] == 0.0:
            path.extend([cur] * samples_per_letter)
        else:
            c, _, _ = geom.tube(abs(code) - 1)
            d = cur - c
            ang = theta[0] * frac[:-1]
            arc = np.stack([c[0] + np.cos(ang) * d[0] - np.sin(ang) * d[1], c[1] + np.sin(ang) * d[0] + np.cos(ang) * d[1]], -1)
            path.extend(arc)
            path.append(nxt)
        cur = nxt
    return np.array(path)
