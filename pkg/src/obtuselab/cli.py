"""Batch front end: ``obtuselab <command> --space SPEC [options]``.

Every command prints a JSON document (or CSV) whose rows carry
``command, spec, seed, value, ladder, uncertainty, convention_notes,
wall_time`` plus a ``details`` object.  Floats are written with 12
significant digits; ``wall_time`` stays null unless ``--wall-time`` is given,
so repeated runs are byte-identical.

Exit codes: 0 ok, 2 bad spec or argument, 3 capability mismatch,
4 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import flatcone as fc
from . import revsurface as rs
from .errors import CapabilityError, DomainError, NonConvergenceError, SpecError
from .invariants import (CONVENTION_NOTES, ComparisonQuery, growth_report, kappa_obtuse_infinity,
                         obtuse_compact, obtuse_from_infinity, pair_obtuse_both)
from .model_trig import HPoint, comparison_angle, strainer_constants
from .spaces import ConeSpace, IdealTriangleSpace, SurfaceSpace, space_from_spec

COMMANDS = ("dist", "geodesic", "angle", "obtuse-pair", "obtuse-inf", "obtuse-compact", "kappa-obtuse",
            "growth", "totcurv", "rays", "constants", "report")
SPACE_TYPES = ("plane", "hyperboloid", "spheroid", "profile_table", "flat_cone", "hyperbolic_ideal_triangle")
COLUMNS = ("command", "spec", "seed", "value", "ladder", "uncertainty", "convention_notes", "wall_time",
           "details")
# commands that need no space
SPACELESS = ("angle", "constants", "report")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    command: str
    rfar: tuple = ()
    samples: int = 720
    seed: int = 0
    tol: float = 1e-3
    kappa: float = 0.0
    out: str = "json"
    horizon: float = 50.0
    notes: bool = True
    wall_time: bool = False
    args: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise SpecError(f"unknown command {self.command!r}", "command")
        if any(b <= a for a, b in zip(self.rfar, self.rfar[1:])):
            raise SpecError("--rfar ladder must be strictly increasing", "rfar")
        if not self.tol > 0:
            raise SpecError("--tol must be positive", "tol")
        if self.samples < 1:
            raise SpecError("--samples must be >= 1", "samples")
        if self.out not in ("json", "csv"):
            raise SpecError("--out must be json or csv", "out")


# ---------------------------------------------------------------------------
# space specs
# ---------------------------------------------------------------------------

def parse_space_spec(text: str) -> dict:
    """Parse and validate a JSON space spec; raises SpecError naming the field."""
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", "space") from None
    if not isinstance(spec, dict):
        raise SpecError("space spec must be a JSON object", "space")
    kind = spec.get("type")
    if kind not in SPACE_TYPES:
        raise SpecError(f"type must be one of {', '.join(SPACE_TYPES)}; got {kind!r}", "type")
    if kind == "flat_cone":
        ell = spec.get("length")
        if not isinstance(ell, (int, float)):
            raise SpecError("flat_cone needs a numeric 'length'", "length")
        if not 0.0 < ell <= 2.0 * math.pi:
            raise SpecError(f"length must satisfy 0 < length <= 2*pi; got {ell}", "length")
    elif kind != "hyperbolic_ideal_triangle":
        try:
            rs.make_surface(spec)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(str(exc), "type") from None
    return spec


def _load_space_text(arg: str) -> str:
    if arg.lstrip().startswith("{"):
        return arg
    path = Path(arg)
    if not path.is_file():
        raise SpecError(f"--space is neither inline JSON nor a readable file: {arg}", "space")
    return path.read_text()


def _floats(text, name, n=None):
    try:
        vals = tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise SpecError(f"--{name} expects comma-separated numbers", name) from None
    if n is not None and len(vals) != n:
        raise SpecError(f"--{name} expects {n} numbers", name)
    return vals


def _point(space, text, name):
    if text is None:
        raise SpecError(f"--{name} is required for this command", name)
    a, b = _floats(text, name, 2)
    if isinstance(space, ConeSpace):
        return fc.ConePoint(a, b)
    if isinstance(space, IdealTriangleSpace):
        return HPoint(a, b)
    return rs.SurfacePoint(a, b)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _row(value=None, ladder=(), uncertainty=None, **details):
    return {"value": value, "ladder": list(ladder), "uncertainty": uncertainty, "details": details}


def _estimate_row(est, **extra):
    d = est.as_dict()
    d.update(extra)
    return _row(d.pop("value"), d.pop("ladder"), d.pop("uncertainty"), **d)


def _template(cfg):
    return ComparisonQuery(None, None, cfg.kappa, cfg.rfar, cfg.samples, cfg.seed)


def _cmd_dist(cfg, space):
    p, q = _point(space, cfg.args.get("p"), "p"), _point(space, cfg.args.get("q"), "q")
    d = space.distance(p, q)
    if isinstance(space, IdealTriangleSpace) or d == 0.0:
        return [_row(d, uncertainty=0.0)]
    return [_row(d, uncertainty=0.0, directions_p=space.directions(p, q), directions_q=space.directions(q, p))]


def _cmd_geodesic(cfg, space):
    if not isinstance(space, SurfaceSpace):
        raise CapabilityError("geodesic integration needs a surface of revolution")
    S = space.surface
    p = _point(space, cfg.args.get("p"), "p")
    t = float(cfg.args.get("t") or 0.0)
    length = float(cfg.args.get("length") or 10.0)
    path = rs.integrate_geodesic(S, S.state(p, t), length)
    nu = rs.clairaut(S, path)
    speed = np.sqrt(path.r_dot ** 2 + S.m(path.r) ** 2 * path.theta_dot ** 2)
    end = [float(path.r[-1]), float(path.theta[-1]) % (2 * math.pi)]
    return [_row(end, uncertainty=None, length=length, direction=t, winding=path.winding,
                 clairaut_drift=float(np.max(np.abs(nu - nu[0]))),
                 speed_drift=float(np.max(np.abs(speed - 1.0))))]


def _cmd_angle(cfg, space):
    sides = cfg.args.get("sides")
    if sides is None:
        raise SpecError("angle needs --sides a,b,c (angle opposite c)", "sides")
    a, b, c = _floats(sides, "sides", 3)
    return [_row(comparison_angle(cfg.kappa, (a, b, c)), uncertainty=0.0, kappa=cfg.kappa, sides=[a, b, c])]


def _cmd_obtuse_pair(cfg, space):
    p, q = _point(space, cfg.args.get("p"), "p"), _point(space, cfg.args.get("q"), "q")
    query = ComparisonQuery(p, q, cfg.kappa, cfg.rfar, cfg.samples, cfg.seed)
    both = pair_obtuse_both(space, query)
    return [_estimate_row(both[v], variant=v) for v in ("angle", "comparison")]


def _separations(cfg):
    seps = _floats(cfg.args.get("sep") or "0.1,0.03,0.01", "sep")
    if any(b >= a for a, b in zip(seps, seps[1:])) or min(seps) <= 0:
        raise SpecError("--sep must be positive and strictly decreasing", "sep")
    return seps


def _cmd_obtuse_inf(cfg, space):
    if space.compact:
        raise CapabilityError("obtuse-inf needs a noncompact space")
    est = obtuse_from_infinity(space, _separations(cfg), _template(cfg), variant="both",
                               n_pairs=int(cfg.args.get("pairs") or 12))
    return [_estimate_row(est[v], variant=v) for v in ("angle", "comparison")]


def _cmd_obtuse_compact(cfg, space):
    if not space.compact:
        raise CapabilityError("obtuse-compact needs a compact space")
    est = obtuse_compact(space, _separations(cfg), _template(cfg), variant="both",
                         n_pairs=int(cfg.args.get("pairs") or 12))
    return [_estimate_row(est[v], variant=v) for v in ("angle", "comparison")]


def _cmd_kappa_obtuse(cfg, space):
    est = kappa_obtuse_infinity(space, cfg.kappa, n_pairs=int(cfg.args.get("pairs") or 24), seed=cfg.seed,
                                far_radii=cfg.rfar, samples=cfg.samples)
    return [_estimate_row(est)]


def _cmd_growth(cfg, space):
    g = growth_report(space)
    key = "normalized_volume" if space.compact else "v_inf"
    return [_row(g[key], uncertainty=None, **g)]


def _cmd_totcurv(cfg, space):
    if isinstance(space, ConeSpace):
        ell = space.cone.link_length
        return [_row(2 * math.pi - ell, uncertainty=0.0, ideal_boundary_length=ell)]
    if not isinstance(space, SurfaceSpace):
        raise CapabilityError("total curvature is available on surfaces of revolution and flat cones")
    S = space.surface
    if S.compact:
        return [_row(4 * math.pi, uncertainty=0.0, note="compact surface: Gauss-Bonnet gives 2*pi*chi")]
    ap = rs.asymptotic_profile(S)
    return [_row(ap["total_curvature"], ap["ladder"],
                 abs(ap["total_curvature"] - ap["total_curvature_quadrature"]),
                 quadrature=ap["total_curvature_quadrature"], m_prime_limit=ap["m_prime_limit"],
                 ideal_boundary_length=ap["ideal_boundary_length"])]


def _cmd_rays(cfg, space):
    if not isinstance(space, SurfaceSpace) or space.compact:
        raise CapabilityError("rays needs a noncompact surface of revolution")
    S = space.surface
    p = _point(space, cfg.args.get("p"), "p")
    meas = rs.ray_measure(S, p, horizon=cfg.horizon, tol=cfg.tol)
    ap = rs.asymptotic_profile(S)
    return [_row(meas["lower"], uncertainty=meas["upper"] - meas["lower"], upper=meas["upper"],
                 maeda_bound=ap["ideal_boundary_length"], horizon=cfg.horizon)]


def _cmd_constants(cfg, space):
    a = cfg.args
    missing = [k for k in ("n", "D", "rmin", "v1") if a.get(k) is None]
    if missing:
        raise SpecError("constants needs --n --D --rmin --v1", missing[0])
    out = strainer_constants(int(a["n"]), float(a["D"]), float(a["rmin"]), float(a["v1"]), tol=min(cfg.tol, 1e-9))
    return [_row(out["c1"], uncertainty=0.0, c1=out["c1"], eps=out["eps"])]


def _cmd_report(cfg, space):
    from .acceptance import run_all
    which = None
    if cfg.args.get("criteria"):
        which = {int(x) for x in _floats(cfg.args["criteria"], "criteria")}
    rows = []
    for r in run_all(which):
        r = dict(r)
        r.pop("seconds", None)
        rows.append(_row(r.pop("passed"), uncertainty=None, **r))
    return rows


HANDLERS = {"dist": _cmd_dist, "geodesic": _cmd_geodesic, "angle": _cmd_angle, "obtuse-pair": _cmd_obtuse_pair,
            "obtuse-inf": _cmd_obtuse_inf, "obtuse-compact": _cmd_obtuse_compact,
            "kappa-obtuse": _cmd_kappa_obtuse, "growth": _cmd_growth, "totcurv": _cmd_totcurv,
            "rays": _cmd_rays, "constants": _cmd_constants, "report": _cmd_report}


def run_command(config: RunConfig, spec) -> list:
    """Dispatch ``config.command``; returns a list of report rows."""
    space = None
    if config.command not in SPACELESS:
        if spec is None:
            raise SpecError(f"{config.command} needs --space", "space")
        space = space_from_spec(spec)
    t0 = time.perf_counter()
    rows = HANDLERS[config.command](config, space)
    elapsed = time.perf_counter() - t0
    out = []
    for r in rows:
        out.append({"command": config.command, "spec": spec, "seed": config.seed, "value": r["value"],
                    "ladder": r["ladder"], "uncertainty": r["uncertainty"],
                    "convention_notes": CONVENTION_NOTES if config.notes else None,
                    "wall_time": elapsed if config.wall_time else None, "details": r["details"]})
    return out


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _clean(x):
    """JSON-safe copy with floats cut to 12 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.12g}") if math.isfinite(x) else None
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v) for v in x]
    if dataclasses.is_dataclass(x):
        return _clean(dataclasses.asdict(x))
    if x is None or isinstance(x, str):
        return x
    return str(x)


def emit_report(results, fmt: str = "json") -> bytes:
    rows = [_clean(r) for r in results]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            cells = []
            for c in COLUMNS:
                v = r.get(c)
                if isinstance(v, (dict, list)):
                    v = json.dumps(v, sort_keys=True, allow_nan=False)
                cells.append("" if v is None else v)
            w.writerow(cells)
        return buf.getvalue().encode()
    # a lone estimate is one object; report always stays an array
    doc = rows[0] if len(rows) == 1 and rows[0].get("command") != "report" else rows
    return (json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n").encode()


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="obtuselab", description="Obtuse constants and comparison geometry "
                                 "on model surfaces.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--space", help="space spec: inline JSON or a file path")
    ap.add_argument("--rfar", default="", help="far radius ladder a,b,c")
    ap.add_argument("--samples", type=int, default=720, help="far samples per radius")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-3)
    ap.add_argument("--kappa", type=float, default=0.0)
    ap.add_argument("--horizon", type=float, default=50.0)
    ap.add_argument("--out", choices=("json", "csv"), default="json")
    ap.add_argument("--convention-notes", choices=("on", "off"), default="on")
    ap.add_argument("--wall-time", action="store_true", help="record elapsed seconds (breaks byte-identity)")
    ap.add_argument("--output", help="write to this file instead of stdout")
    g = ap.add_argument_group("command arguments")
    g.add_argument("--p", help="first point, two numbers")
    g.add_argument("--q", help="second point, two numbers")
    g.add_argument("--t", help="initial meridian angle for geodesic")
    g.add_argument("--length", help="geodesic length")
    g.add_argument("--sides", help="three side lengths for angle")
    g.add_argument("--sep", help="pair separations, strictly decreasing")
    g.add_argument("--pairs", help="pairs per separation")
    g.add_argument("--criteria", help="acceptance rows to run in report, e.g. 2,3,10")
    g.add_argument("--n")
    g.add_argument("--D")
    g.add_argument("--rmin")
    g.add_argument("--v1")
    return ap


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        spec = parse_space_spec(_load_space_text(ns.space)) if ns.space else None
        cfg = RunConfig(ns.command, _floats(ns.rfar, "rfar") if ns.rfar else (), ns.samples, ns.seed, ns.tol,
                        ns.kappa, ns.out, ns.horizon, ns.convention_notes == "on", ns.wall_time,
                        {k: getattr(ns, k) for k in ("p", "q", "t", "length", "sides", "sep", "pairs",
                                                     "criteria", "n", "D", "rmin", "v1")})
        data = emit_report(run_command(cfg, spec), cfg.out)
    except SpecError as exc:
        print(f"obtuselab: spec error: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"obtuselab: capability error: {exc}", file=sys.stderr)
        return 3
    except NonConvergenceError as exc:
        print(f"obtuselab: non-convergence: {exc}", file=sys.stderr)
        return 4
    except DomainError as exc:
        print(f"obtuselab: invalid input: {exc}", file=sys.stderr)
        return 2
    if ns.output:
        Path(ns.output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    return 0


if __name__ == "__main__":
    sys.exit(main())
