"""Experiment plumbing: configs, the epsilon convergence sweep, volume-class reports.

Reduced-cohomology norms are infima over representatives and are not
computable, so the reports compare cochain-level quantities instead: the
closed-form core term against the measured induced value.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from bcoh.cochains import Cochain, Quasimorphism, brooks_homogeneous, qm_to_two_cocycle, zero_cochain
from bcoh.eightmodel import DEFAULT_GEOMETRY, LABELS, ModelGeometry, RegionLabel, TransformationElement
from bcoh.homotopy import default_cuts
from bcoh.hypervol import GroupAction, loxodromic_pair, volume_cocycle
from bcoh.induce import (
    Integrator,
    _core_terms,
    core_closed_form,
    default_workers,
    induce,
    induced_quasimorphism,
    sample_tally,
)
from bcoh.words import parse_word

SCHEMA_VERSION = 1
SURROGATE_NOTE = (
    "cochain-level surrogate: class norms are not computable, "
    "so the closed-form core term is compared with the measured induced value"
)


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------- descriptors


def action_from_descriptor(rho: Optional[dict]) -> GroupAction:
    rho = dict(rho or {})
    kind = rho.pop("kind", "loxodromic")
    if kind != "loxodromic":
        raise ConfigError(f"unknown action kind {kind!r}")
    try:
        return loxodromic_pair(**rho)
    except TypeError as exc:
        raise ConfigError(f"bad action parameters: {exc}") from None


def cochain_from_descriptor(desc: dict) -> Cochain:
    """Build a cochain from ``{"kind": "brooks2", "pattern": "ab"}``, ``{"kind": "vol3", "rho": {...}}``
    or ``{"kind": "zero", "degree": n}``."""
    kind = desc.get("kind")
    if kind == "brooks2":
        return qm_to_two_cocycle(quasimorphism_from_descriptor(desc))
    if kind == "vol3":
        tol = float(desc.get("tol", 1e-6))
        return volume_cocycle(action_from_descriptor(desc.get("rho")), tol=tol)
    if kind == "zero":
        return zero_cochain(int(desc.get("degree", 2)))
    raise ConfigError(f"unknown cochain kind {kind!r}")


def quasimorphism_from_descriptor(desc: dict) -> Quasimorphism:
    if desc.get("kind") not in ("brooks2", "brooks"):
        raise ConfigError("a quasimorphism needs a brooks descriptor")
    try:
        return brooks_homogeneous(parse_word(desc.get("pattern", "")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_element(text: str) -> TransformationElement:
    try:
        return TransformationElement.parse(text.strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_tuple(text: str) -> list[TransformationElement]:
    return [_parse_element(t) for t in text.split(",")]


# ------------------------------------------------------------------ config


@dataclass
class ExperimentConfig:
    geometry: dict = field(default_factory=dict)
    cochain: dict = field(default_factory=lambda: {"kind": "brooks2", "pattern": "ab"})
    words: list = field(default_factory=lambda: ["ab"])
    epsilons: list = field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05])
    integrator: dict = field(default_factory=lambda: {"mode": "regions", "mc_samples": 100_000, "seed": 0})
    powers: int = 4
    word_cap: int = 8
    output: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        eps = [float(e) for e in self.epsilons]
        if not eps:
            raise ConfigError("epsilon ladder is empty")
        if any(not 0.0 < e < 1.0 for e in eps):
            raise ConfigError("epsilons must lie in (0, 1)")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epsilon ladder must be strictly decreasing")
        self.epsilons = eps
        for w in self.words:
            if len(_parse_element(w)) > self.word_cap:
                raise ConfigError(f"word {w!r} longer than cap {self.word_cap}")
        if self.powers < 4:
            raise ConfigError("powers must be >= 4")
        try:
            self.make_integrator()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad integrator settings: {exc}") from None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def base_geometry(self) -> ModelGeometry:
        return ModelGeometry.from_dict(self.geometry) if self.geometry else DEFAULT_GEOMETRY

    def make_integrator(self) -> Integrator:
        d = dict(self.integrator)
        d.setdefault("workers", default_workers())
        return Integrator(**d)


# ------------------------------------------------------- convergence sweep


@dataclass
class ConvergenceRow:
    epsilon: float
    word: str
    mu_core_both: float
    mu_core_a: float
    mu_core_b: float
    mu_collar: float
    value: float
    core_closed_form: float
    discrepancy: float
    collar_bound: float
    stat_error: float

    @property
    def ok(self) -> bool:
        return self.discrepancy <= self.collar_bound + 3.0 * self.stat_error


CSV_COLUMNS = ["schema_version"] + list(ConvergenceRow.__dataclass_fields__) + ["ok"]


def _sweep_row(cfg: ExperimentConfig, q: Quasimorphism, eps: float, word: str) -> ConvergenceRow:
    geom = cfg.base_geometry().with_epsilon(eps)
    g = _parse_element(word)
    res = induced_quasimorphism(q, g, cfg.make_integrator(), geom, cfg.powers)
    core = core_closed_form(q, g.word, geom)
    return ConvergenceRow(
        epsilon=eps,
        word=g.text(),
        mu_core_both=geom.region_measure(RegionLabel.CORE_BOTH),
        mu_core_a=geom.region_measure(RegionLabel.CORE_A_ONLY),
        mu_core_b=geom.region_measure(RegionLabel.CORE_B_ONLY),
        mu_collar=geom.region_measure(RegionLabel.COLLAR),
        value=res.value,
        core_closed_form=core,
        discrepancy=abs(res.value - core),
        collar_bound=res.collar_bound,
        stat_error=res.stat_error,
    )


def converge_sweep(cfg: ExperimentConfig, workers: int = 1) -> list[ConvergenceRow]:
    """One row per (epsilon, word), in ladder order."""
    if cfg.cochain.get("kind") == "zero":
        q = Quasimorphism(lambda w: 0.0, 0.0, True, "zero")
    else:
        q = quasimorphism_from_descriptor(cfg.cochain)
    # geometry validation happens up front for every rung
    for eps in cfg.epsilons:
        cfg.base_geometry().with_epsilon(eps)
    jobs = [(eps, w) for eps in cfg.epsilons for w in cfg.words]
    if workers <= 1:
        return [_sweep_row(cfg, q, e, w) for e, w in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _sweep_row(cfg, q, *job), jobs))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def convergence_csv(rows: Sequence[ConvergenceRow], cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# config={json.dumps(cfg.to_dict(), sort_keys=True)}\n")
    buf.write(f"# {SURROGATE_NOTE}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([SCHEMA_VERSION] + [_fmt(v) for v in asdict(r).values()] + [int(r.ok)])
    return buf.getvalue()


def read_convergence_csv(text: str) -> tuple[ExperimentConfig, list[ConvergenceRow]]:
    lines = text.splitlines()
    cfg = None
    body = []
    for line in lines:
        if line.startswith("# config="):
            cfg = ExperimentConfig.from_dict(json.loads(line[len("# config=") :]))
        elif not line.startswith("#"):
            body.append(line)
    if cfg is None:
        raise ConfigError("report has no embedded config")
    rows = []
    for rec in csv.DictReader(body):
        if int(rec["schema_version"]) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {rec['schema_version']}")
        kw = {}
        for name in ConvergenceRow.__dataclass_fields__:
            kw[name] = rec[name] if name == "word" else float(rec[name])
        rows.append(ConvergenceRow(**kw))
    return cfg, rows


# ------------------------------------------------------ volume class eval


@dataclass
class VolumeEntry:
    region: str
    words: tuple[str, ...]
    measure: float
    weight: float
    volume: float
    est_error: float


@dataclass
class VolumeReport:
    tuple_text: tuple[str, ...]
    entries: list
    collar: list
    core_total: float
    collar_total: float
    total: float
    stat_error: float
    quad_error: float
    area: float
    config: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        d["note"] = SURROGATE_NOTE
        return d

    def table_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# config={json.dumps(self.config, sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["schema_version", "region", "word1", "word2", "word3", "word4", "measure", "weight", "volume", "est_error"])
        for e in self.entries + self.collar:
            w.writerow([SCHEMA_VERSION, e.region, *e.words, repr(e.measure), repr(e.weight), repr(e.volume), repr(e.est_error)])
        return buf.getvalue()


def volume_class_eval(cfg: ExperimentConfig, elements: Sequence[TransformationElement]) -> VolumeReport:
    """Finite weighted sum of simplex volumes: exact regions plus the measured collar."""
    if cfg.cochain.get("kind") != "vol3":
        raise ConfigError("volume_class_eval needs a vol3 cochain")
    if len(elements) != 4:
        raise ConfigError("volume_class_eval needs 4 elements")
    c = cochain_from_descriptor(cfg.cochain)
    fn = c.fn
    geom = cfg.base_geometry()
    cuts = default_cuts(geom)
    integ = cfg.make_integrator()
    area = geom.area

    terms = _core_terms(geom, cuts, list(elements), integ)
    core_vals = fn.eval_with_error([t[1] for t in terms])
    entries, core_var = [], 0.0
    for (lab, words, mu, dmu), (v, e) in zip(terms, core_vals):
        entries.append(VolumeEntry(lab.value, tuple(w.text() for w in words), mu, mu / area, v, e))
        core_var += (dmu * v) ** 2

    mu_b = geom.region_measure(RegionLabel.COLLAR)
    tally = sample_tally(geom, cuts, list(elements), integ.mc_samples, integ.seed, "collar", integ.workers)
    items = list(tally.items())
    vals = fn.eval_with_error([words for _, words, _ in items])
    n = tally.total
    collar = []
    for (_, words, cnt), (v, e) in zip(items, vals):
        m = mu_b * cnt / n
        collar.append(VolumeEntry(RegionLabel.COLLAR.value, tuple(w.text() for w in words), m, m / area, v, e))
    mean = math.fsum(cnt * v for (_, _, cnt), (v, _) in zip(items, vals)) / n
    second = math.fsum(cnt * v * v for (_, _, cnt), (v, _) in zip(items, vals)) / n
    sd = math.sqrt(max(second - mean * mean, 0.0) / max(n - 1, 1))

    core_total = math.fsum(e.measure * e.volume for e in entries)
    collar_total = mu_b * mean
    quad = math.fsum(e.measure * e.est_error for e in entries + collar)
    return VolumeReport(
        tuple_text=tuple(g.text() for g in elements),
        entries=entries,
        collar=collar,
        core_total=core_total,
        collar_total=collar_total,
        total=core_total + collar_total,
        stat_error=math.sqrt(core_var + (mu_b * sd) ** 2),
        quad_error=quad,
        area=area,
        config=cfg.to_dict(),
    )


def regions_report(geom: ModelGeometry) -> dict:
    measures = {lab.value: geom.region_measure(lab) for lab in LABELS}
    total = math.fsum(measures.values())
    return {
        "geometry": geom.to_dict(),
        "measures": measures,
        "tube_overlap": geom.measures["tube_overlap"],
        "sum": total,
        "area": geom.area,
        "residual": total - geom.area,
    }


def induce_report(
    desc: dict, elements: Sequence[TransformationElement], integ: Integrator, geom: ModelGeometry
) -> dict:
    c = cochain_from_descriptor(desc)
    res = induce(c, elements, integ, geom)
    out = res.to_dict()
    out["tuple"] = [g.text() for g in elements]
    out["cochain"] = desc
    return out
