"""Command-line front end: ``resonance11 <command> ...``.

Reports are JSON with a fixed key order and floats written with 17
significant digits, so identical inputs give byte-identical output.
Exit status is 0 on success, 1 when an operation fails and 2 on usage
errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dynamics, tangent
from .invariants import ReducedPoint, hopf_map
from .polyalg import Poly3
from .transforms import CoeffSet, UnfoldingParams, build_unfolding, load_config


class CliError(Exception):
    """An operation-level failure reported with exit status 1."""


# deterministic serialization

def fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise CliError(f"non-finite value {x!r} in output")
    return "%.17g" % x


def _plain(obj):
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text in insertion order, floats as %.17g."""
    def enc(o, level: int) -> str:
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, float):
            return fmt_float(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        return json.dumps(o)
    return enc(_plain(obj), 0) + "\n"


def csv_text(header: Sequence[str] | None, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# run configuration

@dataclass
class RunConfig:
    command: str
    config: Path | None
    output_dir: Path | None
    fmt: str
    jobs: int
    overrides: dict = field(default_factory=dict)

    def emit(self, name: str, text: str) -> None:
        if self.output_dir is None:
            sys.stdout.write(text)
            return
        self.output_dir.mkdir(parents=True, exist_ok=True)
        (self.output_dir / name).write_text(text)

    def get(self, key: str, data: dict | None = None, default=None):
        if self.overrides.get(key) is not None:
            return self.overrides[key]
        if data is not None and key in data:
            return data[key]
        return default


_NUMERIC_KEYS = ("r", "levels", "x0", "T", "dt", "stride", "samples", "mu_path", "depth", "seeds")


def _load(rc: RunConfig, numeric: bool):
    if rc.config is None:
        raise CliError("this command needs --config")
    try:
        return load_config(rc.config, _NUMERIC_KEYS if numeric else ("N", "candidate", "moduli"),
                           allow_float=numeric)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {rc.config}: {exc}") from None


def _hamiltonian(c: CoeffSet, mu: UnfoldingParams) -> Poly3:
    return build_unfolding(c, mu, require_diagonal=False)[0]


def _positive(value, name: str, kind=float):
    try:
        v = kind(value)
    except (TypeError, ValueError):
        raise CliError(f"{name} must be a number, got {value!r}") from None
    if not v > 0:
        raise CliError(f"{name} must be positive")
    return v


# commands

def cmd_invariants(rc: RunConfig, source: str) -> None:
    handle = sys.stdin if source == "-" else open(source, newline="")
    with handle:
        text = handle.read()
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            z = [float(p) for p in parts]
        except ValueError:
            raise CliError(f"row {lineno}: not a number") from None
        if len(z) != 4 or not all(math.isfinite(v) for v in z):
            raise CliError(f"row {lineno}: expected four finite values q1,p1,q2,p2")
        v = hopf_map(z)
        rows.append([v.I1, v.I2, v.I3, v.I4, v.syzygy_residual()])
    if not rows:
        rc.emit("invariants." + rc.fmt, "")
        return
    if rc.fmt == "json":
        keys = ("I1", "I2", "I3", "I4", "residual")
        rc.emit("invariants.json", dumps([dict(zip(keys, r)) for r in rows]))
    else:
        rc.emit("invariants.csv", csv_text(["I1", "I2", "I3", "I4", "residual"], rows))


def cmd_codim(rc: RunConfig) -> None:
    c, _, data = _load(rc, numeric=False)
    N = int(rc.get("N", data, tangent.DEFAULT_N))
    cand = data.get("candidate")
    candidate = tangent.parse_candidate(cand) if cand else tangent.CANDIDATE_COMPLEMENT
    if not c.is_diagonal:
        raise CliError("codim needs a diagonal quadratic part (offdiag = 0)")
    rep = tangent.codimension_report(c, N, candidate)
    rc.emit("codim.json", dumps(rep.to_json()))


def cmd_generators(rc: RunConfig) -> None:
    c, _, _ = _load(rc, numeric=False)
    if not c.is_diagonal:
        raise CliError("generators need a diagonal quadratic part (offdiag = 0)")
    g = tangent.build_generators(c)
    out = {"H": str(g.H), "F1": str(g.F1), "F2": str(g.F2), "F3": str(g.F3),
           "G1": str(g.G1), "G2": str(g.G2)}
    try:
        f5 = tangent.construct_F5(c, g)
        out["F5"] = str(f5.poly)
        out["F5_weights"] = {k: str(v) for k, v in f5.weights.items()}
    except tangent.DegenerateError as exc:
        out["F5"] = None
        out["F5_error"] = str(exc)
    _, d2 = tangent.sharp_matrix("A2", c, gens=g)
    out["det_A2"] = str(d2)
    rc.emit("generators.json", dumps(out))


def cmd_portrait(rc: RunConfig) -> None:
    c, mu, data = _load(rc, numeric=True)
    H = _hamiltonian(c, mu)
    r = _positive(rc.get("r", data, 1.0), "r")
    depth = int(rc.get("depth", data, 5))
    seeds = int(rc.get("seeds", data, dynamics.DEFAULT_SEEDS))
    eqs = dynamics.find_equilibria(H, r, seeds)
    levels = rc.get("levels", data, 12)
    if isinstance(levels, (int, str)) and not isinstance(levels, bool):
        levels = dynamics.default_levels(eqs, _positive(levels, "levels", int))
    elif isinstance(levels, list):
        levels = [float(v) for v in levels]
    else:
        raise CliError("levels must be a count or a list of values")
    lo, hi = min(e.energy for e in eqs), max(e.energy for e in eqs)
    summary = []
    curve_blocks = []
    for k, h in enumerate(levels):
        ls = dynamics.level_curves(H, r, h, depth)
        if not ls.curves:
            print(f"warning: level {fmt_float(h)} is outside [{fmt_float(lo)}, {fmt_float(hi)}] "
                  "or misses the mesh; curve file is empty", file=sys.stderr)
        rows = [[cid, vi, float(p[0]), float(p[1]), float(p[2])]
                for cid, curve in enumerate(ls.curves) for vi, p in enumerate(curve)]
        name = f"curves_{k:03d}.{rc.fmt}"
        curve_blocks.append((name, rows))
        summary.append({"level": h, "file": name, "curves": len(ls.curves), "closed": ls.closed,
                        "max_level_error": ls.max_level_error,
                        "max_radial_error": ls.max_radial_error})
    report = {"r": r, "depth": depth, "equilibria": [e.to_json() for e in eqs], "levels": summary}
    if rc.output_dir is None:
        report["curves"] = {name: rows for name, rows in curve_blocks}
        rc.emit("portrait.json", dumps(report))
        return
    rc.emit("equilibria.json", dumps(report))
    header = ["curve_id", "vertex_index", "x2", "x3", "x4"]
    for name, rows in curve_blocks:
        if rc.fmt == "json":
            rc.emit(name, dumps([dict(zip(header, row)) for row in rows]))
        else:
            rc.emit(name, csv_text(header, rows))


def _point(value, r: float | None = None) -> np.ndarray:
    if isinstance(value, str):
        value = value.split(",")
    try:
        x = np.array([float(v) for v in value])
    except (TypeError, ValueError):
        raise CliError(f"bad point {value!r}") from None
    if x.shape != (3,):
        raise CliError("a point needs three coordinates x2,x3,x4")
    return x


def cmd_integrate(rc: RunConfig) -> None:
    c, mu, data = _load(rc, numeric=True)
    H = _hamiltonian(c, mu)
    x0 = _point(rc.get("x0", data, None) or [0.0, 1.0, 0.0])
    r = float(np.linalg.norm(x0))
    if "r" in data or rc.overrides.get("r") is not None:
        r_cfg = _positive(rc.get("r", data), "r")
        if abs(r - r_cfg) > dynamics.ON_SPHERE_TOL * r_cfg:
            raise CliError("x0 does not lie on the sphere of radius r")
        r = r_cfg
    T = float(rc.get("T", data, 10.0))
    dt = _positive(rc.get("dt", data, 1e-3), "dt")
    stride = int(rc.get("stride", data, 1))
    traj = dynamics.integrate(H, ReducedPoint(*x0, r), T, dt, stride)
    rows = [[float(t), float(p[0]), float(p[1]), float(p[2])] for t, p in zip(traj.t, traj.x)]
    header = ["t", "x2", "x3", "x4"]
    if rc.fmt == "json":
        rc.emit("trajectory.json", dumps({"energy_drift": traj.energy_drift(H),
                                          "radius_drift": traj.radius_drift(),
                                          "points": [dict(zip(header, row)) for row in rows]}))
    else:
        rc.emit("trajectory.csv", csv_text(header, rows))


def _path(raw) -> dynamics.LinearPath:
    if not isinstance(raw, dict) or set(raw) != {"start", "end"}:
        raise CliError('mu_path must be {"start": [5 numbers], "end": [5 numbers]}')
    try:
        start = tuple(float(Fraction(v)) if isinstance(v, str) else float(v) for v in raw["start"])
        end = tuple(float(Fraction(v)) if isinstance(v, str) else float(v) for v in raw["end"])
        return dynamics.LinearPath(start, end)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid mu_path: {exc}") from None


def cmd_scan(rc: RunConfig) -> None:
    c, _, data = _load(rc, numeric=True)
    if "mu_path" not in data:
        raise CliError("scan config needs a mu_path")
    path = _path(data["mu_path"])
    r = _positive(rc.get("r", data, 1.0), "r")
    samples = int(rc.get("samples", data, 101))
    if samples < 2:
        raise CliError("samples must be at least 2")
    seeds = int(rc.get("seeds", data, dynamics.DEFAULT_SEEDS))
    res = dynamics.scan(c, path, r, samples, seeds=seeds, jobs=rc.jobs)
    rc.emit("scan.json", dumps(res.to_json()))


def cmd_lift_check(rc: RunConfig) -> None:
    c, mu, data = _load(rc, numeric=True)
    H = _hamiltonian(c, mu)
    r = _positive(rc.get("r", data, 1.0), "r")
    seeds = int(rc.get("seeds", data, dynamics.DEFAULT_SEEDS))
    reports = []
    for e in dynamics.find_equilibria(H, r, seeds):
        rep = dynamics.periodic_orbit_check(H, e, r)
        reports.append({"equilibrium": e.to_json(), "lift": rep.to_json()})
    out = {"h2": r, "all_passed": all(x["lift"]["passed"] for x in reports), "checks": reports}
    rc.emit("lift_check.json", dumps(out))
    if not out["all_passed"]:
        print("warning: invariant drift along a lifted orbit exceeds the bound", file=sys.stderr)


def cmd_moduli_check(rc: RunConfig, pairs: Sequence[str]) -> None:
    c, _, data = _load(rc, numeric=False)
    if not c.is_diagonal:
        raise CliError("moduli-check needs a diagonal quadratic part (offdiag = 0)")
    raw = list(pairs) or [",".join(str(v) for v in p) for p in data.get("moduli", [])]
    if not raw:
        raw = ["1/3,0", "0,-2/5", "1/7,1/11"]
    samples = []
    for s in raw:
        parts = s.split(",")
        if len(parts) != 2:
            raise CliError(f"moduli sample {s!r} must be mu4,mu5")
        try:
            samples.append(tuple(Fraction(p.strip()) for p in parts))
        except ValueError:
            raise CliError(f"moduli sample {s!r} is not rational") from None
    N = int(rc.get("N", data, tangent.DEFAULT_N))
    rep = tangent.moduli_consistency(c, samples, N)
    rc.emit("moduli.json", dumps(rep.to_json()))


# argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", type=Path, default=None,
                        help="write files here instead of printing to stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="format for tabular output")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for scans")

    def with_config(p):
        p.add_argument("--config", type=Path, required=True, help="coefficient config (JSON)")
        return p

    parser = argparse.ArgumentParser(prog="resonance11", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invariants", parents=[common], help="I1..I4 for rows q1,p1,q2,p2")
    p.add_argument("input", nargs="?", default="-", help="CSV file, or - for stdin")

    p = with_config(sub.add_parser("codim", parents=[common], help="codimension report"))
    p.add_argument("--N", type=int, default=None)

    with_config(sub.add_parser("generators", parents=[common], help="tangent space generators"))

    p = with_config(sub.add_parser("portrait", parents=[common], help="equilibria and level curves"))
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--levels", type=int, default=None, help="number of evenly spaced levels")
    p.add_argument("--depth", type=int, default=None, help="icosphere subdivision depth")
    p.add_argument("--seeds", type=int, default=None)

    p = with_config(sub.add_parser("integrate", parents=[common], help="reduced trajectory"))
    p.add_argument("--x0", type=str, default=None, help="x2,x3,x4")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--stride", type=int, default=None)

    p = with_config(sub.add_parser("scan", parents=[common], help="bifurcation scan along mu_path"))
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--seeds", type=int, default=None)

    p = with_config(sub.add_parser("lift-check", parents=[common], help="periodic orbits over equilibria"))
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--seeds", type=int, default=None)

    p = with_config(sub.add_parser("moduli-check", parents=[common], help="mu4, mu5 invariance"))
    p.add_argument("--sample", action="append", default=[], help="mu4,mu5 as rationals")
    p.add_argument("--N", type=int, default=None)
    return parser


_DEFAULT_FORMAT = {"invariants": "csv", "portrait": "csv", "integrate": "csv"}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    keys = ("N", "r", "levels", "depth", "seeds", "x0", "T", "dt", "stride", "samples")
    rc = RunConfig(
        command=args.command,
        config=getattr(args, "config", None),
        output_dir=args.output_dir,
        fmt=args.format or _DEFAULT_FORMAT.get(args.command, "json"),
        jobs=args.jobs,
        overrides={k: getattr(args, k) for k in keys if getattr(args, k, None) is not None},
    )
    handlers = {
        "invariants": lambda: cmd_invariants(rc, args.input),
        "codim": lambda: cmd_codim(rc),
        "generators": lambda: cmd_generators(rc),
        "portrait": lambda: cmd_portrait(rc),
        "integrate": lambda: cmd_integrate(rc),
        "scan": lambda: cmd_scan(rc),
        "lift-check": lambda: cmd_lift_check(rc),
        "moduli-check": lambda: cmd_moduli_check(rc, args.sample),
    }
    try:
        handlers[args.command]()
    except (CliError, ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
