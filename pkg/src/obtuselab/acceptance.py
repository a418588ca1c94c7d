"""The acceptance table: one function per criterion, each returning a result row.

Rows carry ``passed``, the measured quantities and the target/tolerance, so
the same code backs ``tests/test_acceptance.py`` and the ``report`` command.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import flatcone as fc
from . import revsurface as rs
from .invariants import (ComparisonQuery, growth_report, kappa_obtuse_infinity, obtuse_compact,
                         obtuse_from_infinity, pair_obtuse_both, safe_comparison_angle)
from .model_trig import strainer_constants, theta_n
from .spaces import ConeSpace, IdealTriangleSpace, SurfaceSpace

HALF_PI = 0.5 * math.pi
SQRT3 = math.sqrt(3.0)


def _row(number, title, passed, **measured):
    return {"criterion": number, "title": title, "passed": bool(passed), **measured}


def criterion_1(a_values=(0.5, 1.0, SQRT3), separations=(0.1, 0.03, 0.01), n_pairs=36, seed=0):
    """Obtuse constant from infinity on hyperboloids (angle and comparison variants)."""
    rows = []
    ok = True
    for a in a_values:
        space = SurfaceSpace(rs.make_surface({"type": "hyperboloid", "a": a}))
        tmpl = ComparisonQuery(None, None, 0.0, (30.0, 100.0, 300.0, 1000.0), 720, seed)
        est = obtuse_from_infinity(space, separations, tmpl, variant="both", n_pairs=n_pairs)
        ang, cmp_ = est["angle"], est["comparison"]
        good = (ang.value >= HALF_PI - 0.05 and ang.monotone and cmp_.value >= HALF_PI - 0.05)
        ok &= good
        rows.append({"a": a, "angle": ang.value, "angle_ladder": ang.ladder_values,
                     "angle_monotone": ang.monotone, "comparison": cmp_.value,
                     "comparison_ladder": cmp_.ladder_values, "comparison_monotone": cmp_.monotone})
    return _row(1, "ob_inf(hyperboloid) = pi/2", ok, target=HALF_PI, tolerance=0.05, runs=rows)


def criterion_2():
    """Total curvature pi and ideal boundary length pi for hyperboloid(sqrt 3)."""
    s = rs.make_surface({"type": "hyperboloid", "a": SQRT3})
    ap = rs.asymptotic_profile(s)
    gb, quad_, ell = ap["total_curvature"], ap["total_curvature_quadrature"], ap["ideal_boundary_length"]
    ok = abs(gb - math.pi) <= 1e-4 and abs(quad_ - math.pi) <= 1e-4 and abs(ell - math.pi) <= 1e-4
    return _row(2, "total curvature of hyperboloid(sqrt 3)", ok, gauss_bonnet=gb, quadrature=quad_,
                ideal_boundary_length=ell, target=math.pi, tolerance=1e-4)


def criterion_3(a_values=(0.0, 0.5, 1.0, 3.0), cone_lengths=(math.pi / 4, math.pi / 2, math.pi, 2 * math.pi)):
    """Volume growth pi/sqrt(1+a^2); flat cones l/2."""
    vals = [growth_report(SurfaceSpace(rs.make_surface({"type": "hyperboloid", "a": a})))["v_inf"]
            for a in a_values]
    errs = [abs(v - math.pi / math.sqrt(1 + a * a)) for v, a in zip(vals, a_values)]
    decreasing = all(b < a for a, b in zip(vals, vals[1:]))
    cones = [growth_report(ConeSpace(fc.FlatCone(ell)))["v_inf"] for ell in cone_lengths]
    cone_exact = all(v == 0.5 * ell for v, ell in zip(cones, cone_lengths))
    ok = max(errs) <= 1e-4 and decreasing and cone_exact
    return _row(3, "v_inf closed forms", ok, v_inf=vals, max_error=max(errs), decreasing=decreasing,
                cone_v_inf=cones, cone_exact=cone_exact, tolerance=1e-4)


def criterion_4(n_pairs=24, seed=0):
    """Comparison (-1)-obtuse constant from infinity of the ideal triangle."""
    est = kappa_obtuse_infinity(IdealTriangleSpace(), -1.0, n_pairs=n_pairs, seed=seed)
    ok = abs(est.value + HALF_PI) <= 0.05
    return _row(4, "ideal triangle kappa=-1 obtuse constant", ok, value=est.value, ladder=est.ladder_values,
                target=-HALF_PI, tolerance=0.05, worst_pair=est.details["worst_pair"])


def criterion_5(horizon=50.0, tol=1e-3):
    """Rays from p = (2, 0) on hyperboloid(1) and Maeda's ray-measure bound."""
    s = rs.make_surface({"type": "hyperboloid", "a": 1.0})
    p = rs.SurfacePoint(2.0, 0.0)
    ts = (0.0, math.pi / 4, -math.pi / 4, math.pi / 2, -math.pi / 2)
    rays = {t: rs.is_ray(s, p, t, horizon, tol) for t in ts}
    meas = rs.ray_measure(s, p, horizon, tol)
    bound = 2 * math.pi - rs.total_curvature_quadrature(s)
    ok = all(rays.values()) and meas["lower"] >= bound - 0.05
    return _row(5, "rays on hyperboloid(1)", ok, is_ray=[rays[t] for t in ts], directions=list(ts),
                ray_measure=meas, maeda_bound=bound, tolerance=0.05)


def criterion_6(lengths=(math.pi / 4, math.pi / 2, math.pi, 1.5 * math.pi, 2 * math.pi), n_pairs=50, seed=0):
    """Both pair estimators against the exact cone oracle."""
    rng = np.random.default_rng(seed)
    worst = {"comparison": 0.0, "angle": 0.0}
    per = []
    for ell in lengths:
        space = ConeSpace(fc.FlatCone(ell))
        w = {"comparison": 0.0, "angle": 0.0}
        for p, q in space.random_pairs(n_pairs, rng):
            est = pair_obtuse_both(space, ComparisonQuery(p, q, seed=seed))
            for v in w:
                exact = fc.cone_obtuse_inf_exact(space.cone, p, q, variant=v)
                w[v] = max(w[v], abs(est[v].value - exact))
        per.append({"link_length": ell, **w})
        for v in worst:
            worst[v] = max(worst[v], w[v])
    ok = max(worst.values()) <= 1e-3
    return _row(6, "cone oracle equivalence", ok, max_error=worst, per_cone=per, tolerance=1e-3)


def _random_config(s, rng, max_len):
    """Random point x and two geodesics from it whose lengths are verified minimal."""
    while True:
        lo = 0.2 if not s.compact else 0.2
        hi = 3.0 if not s.compact else s.r_max - 0.2
        x = rs.SurfacePoint(float(rng.uniform(lo, hi)), 0.0)
        u, v = rng.uniform(-math.pi, math.pi, 2)
        a, b = rng.uniform(0.05, max_len, 2)
        y = rs.geodesic_points(s, x, float(u), [a])[0]
        z = rs.geodesic_points(s, x, float(v), [b])[0]
        if abs(rs.distance(s, x, y) - a) > 1e-8 or abs(rs.distance(s, x, z) - b) > 1e-8:
            continue
        return x, float(u), float(v), float(a), float(b), y, z


def criterion_7(n_configs=500, seed=0):
    """Comparison-angle monotonicity and angle >= comparison angle (kappa = 0)."""
    rng = np.random.default_rng(seed)
    surfaces = [rs.make_surface({"type": "hyperboloid", "a": 1.0}), rs.make_surface({"type": "spheroid"})]
    worst_mono = -math.inf
    worst_angle = -math.inf
    for k in range(n_configs):
        s = surfaces[k % 2]
        x, u, v, a, b, y, z = _random_config(s, rng, 1.5)
        dyz = rs.distance(s, y, z) if (y.r, y.theta) != (z.r, z.theta) else 0.0
        big = safe_comparison_angle(0.0, a, b, dyz)
        fa, fb = rng.uniform(0.1, 1.0, 2)
        sp = rs.geodesic_points(s, x, u, [fa * a])[0]
        tp = rs.geodesic_points(s, x, v, [fb * b])[0]
        dst = rs.distance(s, sp, tp)
        small = safe_comparison_angle(0.0, fa * a, fb * b, dst)
        worst_mono = max(worst_mono, big - small)
        worst_angle = max(worst_angle, big - rs.direction_angle(u, v))
    ok = worst_mono <= 1e-6 and worst_angle <= 1e-6
    return _row(7, "comparison-angle monotonicity and angle bound", ok, max_monotonicity_excess=worst_mono,
                max_angle_excess=worst_angle, n_configs=n_configs, tolerance=1e-6)


def criterion_8(n_states=200, length=100.0, seed=0):
    """Clairaut constant and unit speed along geodesics of length 100."""
    rng = np.random.default_rng(seed)
    specs = [{"type": "plane"}, {"type": "hyperboloid", "a": 0.5}, {"type": "hyperboloid", "a": 1.0},
             {"type": "hyperboloid", "a": SQRT3}, {"type": "spheroid"}, {"type": "spheroid", "c": 0.6}]
    surfaces = [rs.make_surface(sp) for sp in specs]
    worst_nu = 0.0
    worst_speed = 0.0
    for k in range(n_states):
        s = surfaces[k % len(surfaces)]
        hi = s.r_max - 0.1 if s.compact else 5.0
        p = rs.SurfacePoint(float(rng.uniform(0.1, hi)), float(rng.uniform(0, 2 * math.pi)))
        st = s.state(p, float(rng.uniform(-math.pi, math.pi)))
        path = rs.integrate_geodesic(s, st, length)
        nu = rs.clairaut(s, path)
        m = s.m(path.r)
        worst_nu = max(worst_nu, float(np.max(np.abs(nu - st.nu))))
        worst_speed = max(worst_speed, float(np.max(np.abs(path.r_dot ** 2 + m ** 2 * path.theta_dot ** 2 - 1))))
    ok = worst_nu <= 1e-8 and worst_speed <= 1e-8
    return _row(8, "conservation along geodesics", ok, max_clairaut_drift=worst_nu,
                max_speed_error=worst_speed, n_states=n_states, tolerance=1e-8)


def criterion_9(scales=(0.1, 10.0), separations=(0.1, 0.03, 0.01), n_pairs=12, seed=0):
    """Unit-sphere radius, normalized volume and obtuse constant; scale invariance."""
    out = {}
    for lam in (1.0,) + tuple(scales):
        space = SurfaceSpace(rs.make_surface({"type": "spheroid", "profile": "sin", "scale": lam}))
        g = growth_report(space)
        ob = obtuse_compact(space, [d * lam for d in separations],
                            ComparisonQuery(None, None, seed=seed), variant="angle", n_pairs=n_pairs)
        out[lam] = {"radius": g["radius"], "normalized_volume": g["normalized_volume"], "obtuse": ob.value,
                    "obtuse_ladder": ob.ladder_values}
    base = out[1.0]
    ok = (abs(base["radius"] - math.pi) <= 1e-3 and abs(base["normalized_volume"] - 4 / math.pi) <= 1e-3
          and abs(base["obtuse"] - HALF_PI) <= 1e-3)
    inv = max(max(abs(out[l]["normalized_volume"] - base["normalized_volume"]),
                  abs(out[l]["obtuse"] - base["obtuse"])) for l in scales)
    ok = ok and inv <= 1e-9
    return _row(9, "compact invariants of the unit sphere", ok, runs={str(k): v for k, v in out.items()},
                scale_deviation=inv, tolerance=1e-3)


def criterion_10():
    """C1, theta_2 and monotonicity of the strainer angle in v1."""
    c1 = strainer_constants(2, 1.0, 0.5, 0.1)["c1"]
    c1_err = abs(c1 - (math.cosh(1.0) - math.cosh(0.25)))
    grid = np.linspace(0.0, 0.5 * math.pi, 41)
    th_err = max(abs(theta_n(2, e) - 4 * e / (math.pi + 2 * e)) for e in grid)
    v1s = np.linspace(0.05, 3.0, 25)
    eps = [strainer_constants(2, 1.0, 0.5, float(v))["eps"] for v in v1s]
    mono = all(b >= a for a, b in zip(eps, eps[1:]))
    ok = c1_err <= 1e-9 and th_err <= 1e-9 and mono
    return _row(10, "strainer constants", ok, c1=c1, c1_error=c1_err, theta2_error=th_err,
                eps_monotone=mono, tolerance=1e-9)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10]


def run_all(which=None):
    rows = []
    for k, fn in enumerate(CRITERIA, start=1):
        if which and k not in which:
            continue
        t0 = time.perf_counter()
        row = fn()
        row["seconds"] = time.perf_counter() - t0
        rows.append(row)
    return rows
