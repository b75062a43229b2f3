"""Command line entry point: ``bcoh <subcommand>`` or ``python3 -m bcoh``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from bcoh.eightmodel import DEFAULT_GEOMETRY, GeometryError, ModelGeometry
from bcoh.homotopy import CollarError, DegenerateLoopError, default_cuts, gamma
from bcoh.hypervol import NumericFailure, QuadratureError
from bcoh.induce import Integrator, RegionsModeError, core_closed_form, default_workers, induced_quasimorphism
from bcoh import lab

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_INTEGRATOR = 4


def _geometry(path: str | None) -> ModelGeometry:
    return ModelGeometry.from_json(path) if path else DEFAULT_GEOMETRY


def _load_json_arg(text: str) -> dict:
    """A JSON object given inline or as a file path."""
    p = Path(text)
    try:
        if p.exists():
            return json.loads(p.read_text(encoding="utf-8"))
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise lab.ConfigError(f"invalid JSON in {text!r}: {exc}") from None


def _integrator(args) -> Integrator:
    if args.mode == "mc" and args.seed is None:
        raise lab.ConfigError("--seed is required for Monte Carlo mode")
    workers = args.workers or default_workers()
    return Integrator(args.mode, args.samples, args.seed or 0, workers=workers)


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _point(text: str) -> np.ndarray:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise lab.ConfigError(f"point must be 'x,y', got {text!r}") from None
    return np.array([x, y])


def cmd_gamma(args) -> int:
    geom = _geometry(args.geometry)
    cuts = default_cuts(geom)
    g = lab._parse_element(args.element)
    if args.points_csv:
        with open(args.points_csv, newline="", encoding="utf-8") as fh:
            pts = [np.array([float(r[0]), float(r[1])]) for r in csv.reader(fh) if r and not r[0].startswith("#")]
        out = csv.writer(sys.stdout, lineterminator="\n")
        out.writerow(["x", "y", "gamma"])
        for p in pts:
            out.writerow([repr(p[0]), repr(p[1]), str(gamma(geom, cuts, g, p))])
    elif args.point:
        print(gamma(geom, cuts, g, _point(args.point)))
    else:
        raise lab.ConfigError("give --point or --points-csv")
    return EXIT_OK


def cmd_induce(args) -> int:
    desc = _load_json_arg(args.cochain)
    rep = lab.induce_report(desc, lab.parse_tuple(args.tuple), _integrator(args), _geometry(args.geometry))
    _emit(json.dumps(rep, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_qm(args) -> int:
    geom = _geometry(args.geometry)
    q = lab.quasimorphism_from_descriptor({"kind": "brooks2", "pattern": args.pattern})
    g = lab._parse_element(args.element)
    res = induced_quasimorphism(q, g, _integrator(args), geom, args.powers)
    core = core_closed_form(q, g.word, geom)
    rep = res.to_dict()
    rep.update(core_closed_form=core, discrepancy=abs(res.value - core), element=g.text(), pattern=args.pattern)
    _emit(json.dumps(rep, indent=2) + "\n", args.output)
    ok = rep["discrepancy"] <= res.collar_bound + 3 * res.stat_error
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_converge(args) -> int:
    if args.rerun:
        cfg, _ = lab.read_convergence_csv(Path(args.rerun).read_text(encoding="utf-8"))
    else:
        cfg = lab.ExperimentConfig.from_json(args.config) if args.config else lab.ExperimentConfig()
    if args.seed is not None:
        cfg.integrator = {**cfg.integrator, "seed": args.seed}
    if cfg.integrator.get("mode") == "mc" and "seed" not in cfg.integrator:
        raise lab.ConfigError("--seed is required for Monte Carlo mode")
    rows = lab.converge_sweep(cfg, workers=args.workers or 1)
    _emit(lab.convergence_csv(rows, cfg), args.output or cfg.output)
    return EXIT_OK if all(r.ok for r in rows) else EXIT_INVARIANT


def cmd_volume(args) -> int:
    cfg = lab.ExperimentConfig.from_json(args.config) if args.config else lab.ExperimentConfig(cochain={"kind": "vol3", "rho": {}})
    if args.seed is not None:
        cfg.integrator = {**cfg.integrator, "seed": args.seed}
    rep = lab.volume_class_eval(cfg, lab.parse_tuple(args.tuple))
    if args.table:
        Path(args.table).write_text(rep.table_csv(), encoding="utf-8")
    _emit(json.dumps(rep.to_dict(), indent=2) + "\n", args.output)
    ok = abs(rep.total) <= 1.015 * rep.area + 3 * rep.stat_error
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_regions(args) -> int:
    rep = lab.regions_report(_geometry(args.geometry))
    _emit(json.dumps(rep, indent=2) + "\n", args.output)
    return EXIT_OK if abs(rep["residual"]) <= 5e-8 else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bcoh", description="Induced bounded cochains on the two-holed disk model.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sampling=False):
        sp.add_argument("--geometry", help="geometry JSON file (default model if omitted)")
        sp.add_argument("--output", "-o", help="write the report here instead of stdout")
        if sampling:
            sp.add_argument("--mode", choices=["regions", "mc"], default="regions")
            sp.add_argument("--samples", type=int, default=100_000)
            sp.add_argument("--seed", type=int)
            sp.add_argument("--workers", type=int)

    sp = sub.add_parser("gamma", help="loop class gamma(g, x)")
    common(sp)
    sp.add_argument("--element", required=True)
    sp.add_argument("--point")
    sp.add_argument("--points-csv")
    sp.set_defaults(func=cmd_gamma)

    sp = sub.add_parser("induce", help="evaluate an induced cochain on a tuple")
    common(sp, sampling=True)
    sp.add_argument("--cochain", required=True, help="cochain descriptor: JSON file or inline JSON")
    sp.add_argument("--tuple", required=True, help='comma separated elements, e.g. "ab,aB,e"')
    sp.set_defaults(func=cmd_induce)

    sp = sub.add_parser("qm", help="induced homogeneous quasimorphism")
    common(sp, sampling=True)
    sp.add_argument("--pattern", default="ab")
    sp.add_argument("--element", required=True)
    sp.add_argument("--powers", type=int, default=4)
    sp.set_defaults(func=cmd_qm)

    sp = sub.add_parser("converge", help="epsilon ladder sweep (CSV)")
    sp.add_argument("--config")
    sp.add_argument("--rerun", help="rerun the config embedded in a previous CSV report")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("volume", help="volume-class evaluation report (JSON)")
    sp.add_argument("--config")
    sp.add_argument("--tuple", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--table", help="also write the weighted simplex table as CSV")
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_volume)

    sp = sub.add_parser("regions", help="region measures and partition check")
    common(sp)
    sp.set_defaults(func=cmd_regions)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (RegionsModeError, QuadratureError, NumericFailure, DegenerateLoopError, CollarError) as exc:
        print(f"integrator error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR
    except (lab.ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
