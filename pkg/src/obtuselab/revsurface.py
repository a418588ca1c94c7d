"""Surfaces of revolution ``dr^2 + m(r)^2 dtheta^2`` around a vertex ``p0``.

Builtin families are described by a meridian curve ``(rho(u), z(u))`` so that
``m = rho(u(r))``; the map ``u(r)`` comes from integrating ``du/dr`` once per
surface.  Internally every length is measured in units of ``scale``; the
public functions take and return physical lengths.

Directions at a point are parametrized by the *meridian angle* ``t``: the
unit vector ``cos t * (outward meridian) + sin t * (positive parallel)``.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import ellipe

from . import kernel
from .errors import DomainError, NonConvergenceError, SpecError

TWO_PI = 2.0 * math.pi
POLE_SNAP = 1.0e-7      # normalized distance below which a point is treated in the vertex chart
R_SPAN = 1.0e5          # normalized extent of the u(r) map for noncompact families
FAN_CACHE_SIZE = 48


@dataclass(frozen=True)
class SurfacePoint:
    r: float
    theta: float = 0.0


@dataclass(frozen=True)
class GeodesicState:
    """Unit-speed initial data; ``nu`` is the Clairaut constant ``m(r)^2 theta'``."""

    point: SurfacePoint
    r_dot: float
    theta_dot: float
    nu: float


@dataclass
class GeodesicPath:
    initial: GeodesicState
    s: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    r_dot: np.ndarray
    theta_dot: np.ndarray
    length: float
    winding: int

    @property
    def end(self) -> SurfacePoint:
        return SurfacePoint(float(self.r[-1]), float(self.theta[-1]) % TWO_PI)


@dataclass
class Connection:
    """Result of :func:`connect`: the distance and every minimal direction found."""

    distance: float
    directions: list           # meridian angles at p of the minimal geodesics
    lengths: list              # their lengths (all within the tolerance band)
    degenerate: bool = False   # a continuum of minimizers was sampled
    paths: list = field(default_factory=list)


class ProfileSurface:
    """Rotationally symmetric surface given by its warping profile ``m``.

    Use :func:`make_surface` to build one.  Instances are immutable apart from
    an internal cache of shooting fans.
    """

    def __init__(self, family, params, scale=1.0, kind=None, pa=0.0, compact=False,
                 r_max=math.inf, nonneg=True, table=None):
        self.family = family
        self.params = dict(params)
        self.scale = float(scale)
        self.kind = kind
        self.pa = float(pa)
        self.compact = compact
        self.r_max_hat = float(r_max)
        self.nonneg = nonneg
        self._table = table
        self._u_map = None
        self._fans = OrderedDict()
        if kind in (kernel.HYPERBOLOID, kernel.SPHEROID) and not (kind == kernel.SPHEROID and self.pa == 1.0):
            span = self.r_max_hat if compact else R_SPAN
            sol = solve_ivp(lambda r, u: [self._dudr(u[0])], (0.0, span), [0.0], method="DOP853",
                            rtol=1e-13, atol=1e-14, dense_output=True)
            self._u_map = sol.sol

    def __repr__(self):
        return f"ProfileSurface({self.family!r}, {self.params!r}, scale={self.scale})"

    @property
    def r_max(self):
        return self.r_max_hat * self.scale

    # -- profile in normalized units --------------------------------------
    def _speed(self, u):
        if self.kind == kernel.HYPERBOLOID:
            w = u * u
            return np.sqrt(1.0 + self.pa ** 2 * w / (w + 1.0))
        if self.kind == kernel.SPHEROID:
            return np.sqrt(np.cos(u) ** 2 + self.pa ** 2 * np.sin(u) ** 2)
        return np.ones_like(u)

    def _dudr(self, u):
        return 1.0 / self._speed(u)

    def u_hat(self, r_hat):
        r_hat = np.asarray(r_hat, dtype=float)
        if self.kind in (kernel.PLANE, kernel.TABLE) or self._u_map is None:
            return r_hat
        if np.any(r_hat > (self.r_max_hat if self.compact else R_SPAN)):
            raise DomainError("radius beyond the tabulated profile span")
        if self.compact:
            r_hat = np.clip(r_hat, 0.0, self.r_max_hat)
        return self._u_map(r_hat)[0]

    def _m_mp_hat(self, r_hat):
        r_hat = np.asarray(r_hat, dtype=float)
        if self.kind == kernel.TABLE:
            return self._table.m(r_hat), self._table.mp(r_hat)
        u = self.u_hat(r_hat)
        if self.kind == kernel.PLANE:
            return u, np.ones_like(u)
        if self.kind == kernel.HYPERBOLOID:
            return u, 1.0 / self._speed(u)
        return np.sin(u), np.cos(u) / self._speed(u)

    def _curv_hat(self, r_hat):
        r_hat = np.asarray(r_hat, dtype=float)
        if self.kind == kernel.PLANE:
            return np.zeros_like(r_hat)
        if self.kind == kernel.TABLE:
            return self._table.curvature(r_hat)
        u = self.u_hat(r_hat)
        a2 = self.pa ** 2
        if self.kind == kernel.HYPERBOLOID:
            return a2 / (u * u + 1.0 + a2 * u * u) ** 2
        return a2 / (a2 * np.sin(u) ** 2 + np.cos(u) ** 2) ** 2

    # -- public profile access (physical units) -----------------------------
    def m(self, r):
        return self._m_mp_hat(np.asarray(r, dtype=float) / self.scale)[0] * self.scale

    def m_prime(self, r):
        return self._m_mp_hat(np.asarray(r, dtype=float) / self.scale)[1]

    def curvature(self, r):
        return self._curv_hat(np.asarray(r, dtype=float) / self.scale) / self.scale ** 2

    def check_point(self, p: SurfacePoint):
        if not (p.r >= 0.0 and math.isfinite(p.r) and math.isfinite(p.theta)):
            raise DomainError(f"invalid surface point {p}")
        if self.compact and p.r > self.r_max * (1 + 1e-12):
            raise DomainError(f"r = {p.r} beyond r_max = {self.r_max}")

    # -- geodesic initial data -------------------------------------------
    def state(self, p: SurfacePoint, t: float) -> GeodesicState:
        """Unit-speed state at ``p`` in meridian-angle direction ``t``."""
        self.check_point(p)
        m = float(self.m(p.r))
        if m <= 0.0:
            raise DomainError("directions at a vertex are not parametrized by the meridian angle")
        thd = math.sin(t) / m
        return GeodesicState(p, math.cos(t), thd, m * m * thd)

    def _y0(self, st: GeodesicState):
        rh = st.point.r / self.scale
        return [rh, st.point.theta, st.r_dot, st.theta_dot * self.scale, float(self.u_hat(rh))]

    def _trace(self, y0, length_hat, s_out=(), radii=(), tol=1e-10, record=False):
        table = self._table.eval_hat if self.kind == kernel.TABLE else None
        return kernel.trace(self.kind, self.pa, self.r_max_hat, y0, length_hat, s_out, radii,
                            rtol=tol, atol=tol, r_chart=1e-3, record=record, table=table)

    # -- shooting fans (normalized units) -----------------------------------
    def fan(self, r0_hat, radii_hat, length_hat, n_dirs=1440):
        """Crossings of the circles ``radii_hat`` by geodesics leaving ``(r0, 0)``.

        Starts from ``n_dirs`` equally spaced meridian angles and bisects
        neighbouring shots whose crossings jump (near a vertex) or whose
        crossing counts differ (near a fold).  Returns ``(t, crossings)`` with
        ``t`` sorted in ``[-pi, pi)`` and ``crossings[j]`` a pair of arrays
        ``(theta, s)`` of shape ``(kmax, len(t))`` (NaN where a geodesic has
        fewer crossings).  Results are cached per argument tuple.
        """
        key = (float(r0_hat), tuple(float(x) for x in radii_hat), float(length_hat), int(n_dirs))
        hit = self._fans.get(key)
        if hit is not None:
            self._fans.move_to_end(key)
            return hit
        u0 = float(self.u_hat(r0_hat))
        m0 = float(self._m_mp_hat(r0_hat)[0])
        nrad = len(radii_hat)

        def shoot(ti):
            y0 = [r0_hat, 0.0, math.cos(ti), math.sin(ti) / m0, u0]
            _, ev, _, _ = self._trace(y0, length_hat, (), radii_hat)
            per = [[] for _ in range(nrad)]
            for row in ev:
                per[int(row[0])].append((row[3], row[1]))
            # flat crossing angles plus per-radius counts, for the split test
            flat = np.array([x[0] for lst in per for x in lst])
            return per, flat, tuple(len(lst) for lst in per)

        def needs_split(sa, sb, dt):
            if sa[2] != sb[2]:
                return dt > fold_dt
            if sa[1].size == 0:
                return False
            d = sa[1] - sb[1]
            d = d - TWO_PI * np.round(d / TWO_PI)
            return bool(np.any(np.abs(d) >= 0.25 * math.pi))

        base = TWO_PI / n_dirs
        shots = {float(ti): shoot(float(ti)) for ti in -math.pi + base * np.arange(n_dirs)}
        jump_dt, fold_dt = base / 2.0 ** 14, base / 2.0 ** 6
        fresh = None
        for _ in range(14):
            ts = sorted(shots)
            new = []
            for a, b_key in zip(ts, ts[1:] + ts[:1]):
                if fresh is not None and a not in fresh and b_key not in fresh:
                    continue
                b = b_key if b_key > a else b_key + TWO_PI
                dt = b - a
                if dt <= jump_dt:
                    continue
                if needs_split(shots[a], shots[b_key], dt):
                    mid = 0.5 * (a + b)
                    new.append(mid - TWO_PI if mid >= math.pi else mid)
            if not new:
                break
            for ti in new:
                shots[ti] = shoot(ti)
            fresh = set(new)
        shots = {k: v[0] for k, v in shots.items()}
        t = np.array(sorted(shots))
        crossings = []
        for j in range(nrad):
            kmax = max([len(shots[ti][j]) for ti in t] + [1])
            th = np.full((kmax, t.shape[0]), np.nan)
            ss = np.full((kmax, t.shape[0]), np.nan)
            for i, ti in enumerate(t):
                for k, (a, b) in enumerate(shots[ti][j]):
                    th[k, i], ss[k, i] = a, b
            crossings.append((th, ss))
        out = (t, crossings)
        self._fans[key] = out
        while len(self._fans) > FAN_CACHE_SIZE:
            self._fans.popitem(last=False)
        return out

    def _cross_theta(self, r0_hat, t, radius_hat, length_hat, s_guess):
        """Unwrapped theta and arclength at the crossing of ``radius_hat`` nearest ``s_guess``."""
        m0 = float(self.m(r0_hat * self.scale)) / self.scale
        y0 = [r0_hat, 0.0, math.cos(t), math.sin(t) / m0, float(self.u_hat(r0_hat))]
        # refinement feeds nearly degenerate comparison triangles: trace tightly
        _, ev, _, _ = self._trace(y0, length_hat, (), [radius_hat], tol=1e-13)
        if ev.shape[0] == 0:
            return math.nan, math.nan
        k = int(np.argmin(np.abs(ev[:, 1] - s_guess)))
        return ev[k, 3], ev[k, 1]


class _Table:
    """Cubic-spline profile with linear continuation past the last sample."""

    def __init__(self, r, m):
        self.r_end = float(r[-1])
        self.spline = CubicSpline(r, m, bc_type=((1, 1.0), "natural") if len(r) > 2 else ((1, 1.0), (2, 0.0)))
        self.m_end = float(self.spline(self.r_end))
        self.mp_end = float(self.spline(self.r_end, 1))

    def m(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.r_end, self.spline(np.minimum(r, self.r_end)),
                        self.m_end + self.mp_end * (r - self.r_end))

    def mp(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.r_end, self.spline(np.minimum(r, self.r_end), 1), self.mp_end)

    def curvature(self, r):
        r = np.asarray(r, dtype=float)
        rr = np.minimum(r, self.r_end)
        m = self.spline(rr)
        k_in = np.where(m > 1e-12, -self.spline(rr, 2) / np.where(m > 1e-12, m, 1.0), -self.spline(0.0, 3))
        return np.where(r <= self.r_end, k_in, 0.0)

    def eval_hat(self, u):
        if u <= self.r_end:
            return float(self.spline(u)), float(self.spline(u, 1)), 1.0
        return self.m_end + self.mp_end * (u - self.r_end), self.mp_end, 1.0


def make_surface(spec: dict) -> ProfileSurface:
    """Build a surface from a family tag and parameters.

    Families: ``plane``; ``hyperboloid`` (``a >= 0``; the surface
    ``z = a sqrt(x^2 + y^2 + 1)``); ``spheroid`` (``profile: "sin"`` for the
    round sphere or ``c > 0`` for the ellipsoid with polar semi-axis ``c``);
    ``profile_table`` (``r``, ``m`` samples).  Every family accepts ``scale``.
    """
    kind = spec.get("type")
    scale = float(spec.get("scale", 1.0))
    if not scale > 0 or not math.isfinite(scale):
        raise SpecError("scale must be positive", "scale")
    if kind == "plane":
        return ProfileSurface("plane", {}, scale, kernel.PLANE)
    if kind == "hyperboloid":
        a = float(spec.get("a", 1.0))
        if not (a >= 0.0 and math.isfinite(a)):
            raise SpecError("hyperboloid parameter a must be >= 0", "a")
        return ProfileSurface("hyperboloid", {"a": a}, scale, kernel.HYPERBOLOID, pa=a)
    if kind == "spheroid":
        if "c" in spec:
            c = float(spec["c"])
        elif spec.get("profile", "sin") == "sin":
            c = 1.0
        else:
            raise SpecError(f"unknown spheroid profile {spec.get('profile')!r}", "profile")
        if not (c > 0.0 and math.isfinite(c)):
            raise SpecError("spheroid axis ratio c must be positive", "c")
        if c == 1.0:
            r_max = math.pi
        else:
            # meridian length of the ellipse (sin u, c cos u), u in [0, pi]
            r_max = 2.0 * float(ellipe(1.0 - c * c))
        return ProfileSurface("spheroid", {"c": c}, scale, kernel.SPHEROID, pa=c, compact=True, r_max=r_max)
    if kind == "profile_table":
        try:
            r = np.asarray(spec["r"], dtype=float)
            m = np.asarray(spec["m"], dtype=float)
        except KeyError as exc:
            raise SpecError("profile_table needs 'r' and 'm' arrays", exc.args[0]) from None
        if r.ndim != 1 or r.shape != m.shape or r.size < 2:
            raise SpecError("r and m must be equal-length 1-d arrays with at least 2 samples", "r")
        if np.any(np.diff(r) <= 0):
            raise SpecError("table radii must be strictly increasing", "r")
        if r[0] != 0.0 or m[0] != 0.0:
            raise SpecError("table must start at r = 0 with m(0) = 0", "m")
        if np.any(m[1:] <= 0):
            raise SpecError("m must be positive away from the vertex", "m")
        table = _Table(r / scale, m / scale)
        nonneg = bool(np.all(table.curvature(np.linspace(0, r[-1] / scale, 512)) >= -1e-9))
        return ProfileSurface("profile_table", {"r": r.tolist(), "m": m.tolist()}, scale, kernel.TABLE,
                              nonneg=nonneg, table=table)
    raise SpecError(f"unknown surface family {kind!r}", "type")


def curvature(surface: ProfileSurface, r: float) -> float:
    """Gaussian curvature ``K = -m''/m`` (its limit at the vertex)."""
    if r < 0 or (surface.compact and r > surface.r_max):
        raise DomainError(f"r = {r} outside the surface")
    return float(surface.curvature(r))


def integrate_geodesic(surface: ProfileSurface, init: GeodesicState, length: float,
                       tol: float = 1e-10, n_samples: int = 257) -> GeodesicPath:
    """Trace the unit-speed geodesic with initial data ``init`` for ``length``."""
    if not length > 0:
        raise DomainError("geodesic length must be positive")
    speed2 = init.r_dot ** 2 + float(surface.m(init.point.r)) ** 2 * init.theta_dot ** 2
    if abs(speed2 - 1.0) > 1e-8:
        raise DomainError(f"initial velocity is not unit speed (|v|^2 = {speed2})")
    sc = surface.scale
    s_hat = np.linspace(0.0, length / sc, n_samples)
    out, _, fin, _ = surface._trace(surface._y0(init), length / sc, s_hat, (), tol=tol)
    theta = out[:, 1]
    return GeodesicPath(init, s_hat * sc, out[:, 0] * sc, theta, out[:, 2], out[:, 3] / sc,
                        length, _full_turns(theta[-1] - theta[0]))


def _full_turns(dtheta):
    # a closed parallel ends a hair short of 2 pi
    n = math.floor(abs(dtheta) / TWO_PI + 1e-9)
    return int(math.copysign(n, dtheta))


def clairaut(surface: ProfileSurface, path: GeodesicPath) -> np.ndarray:
    """Clairaut constant ``m^2 theta'`` along a traced path."""
    return surface.m(path.r) ** 2 * path.theta_dot


def tangent_angle(surface: ProfileSurface, at: SurfacePoint, v1, v2) -> float:
    """Riemannian angle between velocities ``(r_dot, theta_dot)`` at ``at``."""
    m = float(surface.m(at.r))
    a = (v1[0], m * v1[1])
    b = (v2[0], m * v2[1])
    if math.hypot(*a) == 0.0 or math.hypot(*b) == 0.0:
        raise DomainError("zero velocity has no direction")
    return math.atan2(abs(a[0] * b[1] - a[1] * b[0]), a[0] * b[0] + a[1] * b[1])


def direction_angle(t1: float, t2: float) -> float:
    """Angle between two meridian-angle directions at the same point."""
    d = abs(t1 - t2) % TWO_PI
    return min(d, TWO_PI - d)


# ---------------------------------------------------------------------------
# two-point boundary value problem
# ---------------------------------------------------------------------------

def _wrap(x):
    # exact for |x| < pi, unlike the modulo form
    return x - TWO_PI * round(x / TWO_PI)


def _newton_shoot(surface, r0, r1, dth, t, s, tol=1e-12):
    """2-D Newton on ``(t, s)`` so that the geodesic from ``(r0, 0)`` ends at ``(r1, dth)``.

    Works in normalized units; returns ``(t, s)`` or None.
    """
    m0 = float(surface.m(r0 * surface.scale)) / surface.scale
    m1 = float(surface.m(r1 * surface.scale)) / surface.scale
    u0 = float(surface.u_hat(r0))

    def shoot(t, s):
        y0 = [r0, 0.0, math.cos(t), math.sin(t) / m0, u0]
        _, _, fin, _ = surface._trace(y0, s, (), (), tol=1e-12)
        return fin

    for _ in range(30):
        fin = shoot(t, s)
        if fin[0] < s * (1 - 1e-12):
            return None
        f = np.array([fin[1] - r1, m1 * _wrap(fin[2] - dth)])
        if np.max(np.abs(f)) < tol * max(1.0, s):
            return t, s
        h = 1e-7
        fin_t = shoot(t + h, s)
        jt = np.array([fin_t[1] - fin[1], m1 * _wrap(fin_t[2] - fin[2])]) / h
        js = np.array([fin[3], m1 * fin[4]])
        jac = np.column_stack([jt, js])
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        # damp large steps; the chart is only trusted locally
        big = max(abs(step[0]) / 0.2, abs(step[1]) / (0.2 * max(1.0, s)), 1.0)
        t += step[0] / big
        s += step[1] / big
        if s <= 0:
            return None
    return None


def _connect_local(surface, r0, r1, dth, tol=1e-12):
    """Newton shooting for a nearby target from the chart guess."""
    m0 = float(surface.m(r0 * surface.scale)) / surface.scale
    m1 = float(surface.m(r1 * surface.scale)) / surface.scale
    mbar = 0.5 * (m0 + m1)
    t = math.atan2(mbar * dth, r1 - r0)
    s = math.hypot(r1 - r0, mbar * dth)
    return _newton_shoot(surface, r0, r1, dth, t, s, tol)


def _fold_guesses(t, th, ss, target, tol=0.05):
    """Shooting guesses near folds (where the crossing count changes) close to ``target``.

    Linear interpolation cannot see roots at or next to a tangency with the
    target circle, so these seed a Newton solve instead.
    """
    counts = np.sum(np.isfinite(th), axis=0)
    n = t.shape[0]
    change = np.nonzero(counts != np.roll(counts, -1))[0]
    out = []
    for i in change:
        for j in (i, (i + 1) % n):
            for k in range(counts[j]):
                if abs(_wrap(th[k, j] - target)) < tol:
                    out.append((float(t[j]), float(ss[k, j])))
    # keep one guess per cluster
    out.sort()
    keep = []
    for g in out:
        if keep and abs(g[0] - keep[-1][0]) < 1e-3 and abs(g[1] - keep[-1][1]) < 1e-2:
            continue
        keep.append(g)
    return keep


def _fold_roots(surface, r0, r1, t, th, ss, target, length):
    """Roots the linear fan scan cannot see: tangencies, and arcs of a geodesic parallel."""
    roots = []
    if r1 == r0:
        m0, mp0 = (float(x) for x in surface._m_mp_hat(r0))
        if abs(mp0) < 1e-9:
            # the parallel through p is itself a geodesic; its neighbours only oscillate about it
            dth = _wrap(target)
            if dth != 0.0:
                roots.append((math.copysign(0.5 * math.pi, dth), m0 * abs(dth)))
    for tg, sg in _fold_guesses(t, th, ss, target):
        sol = _newton_shoot(surface, r0, r1, target, tg, sg)
        if sol is not None and sol[1] <= length:
            roots.append(sol)
    return roots


def _nearest_shot_roots(surface, r0, r1, t, th, ss, target, length, n_try=8):
    """Last resort: Newton from the shots whose crossings land closest to the target."""
    miss = np.abs(np.vectorize(_wrap)(np.where(np.isfinite(th), th - target, np.pi)))
    order = np.argsort(miss, axis=None)[:n_try]
    roots = []
    for flat in order:
        k, i = np.unravel_index(flat, th.shape)
        sol = _newton_shoot(surface, r0, r1, target, float(t[i]), float(ss[k, i]))
        if sol is not None and sol[1] <= length:
            roots.append(sol)
    return roots


def _fan_roots(t, th, ss, targets, winding_bound):
    """Linear-interpolated shooting roots for every target angle.

    ``th``/``ss`` are ``(kmax, n)`` crossing arrays; returns a list (one per
    target) of ``(t_root, s_root, interval, branch)`` tuples.
    """
    n = t.shape[0]
    tt = np.append(t, t[0] + TWO_PI)
    th = np.concatenate([th, th[:, :1]], axis=1)
    ss = np.concatenate([ss, ss[:, :1]], axis=1)
    targets = np.asarray(targets, dtype=float)
    res = [[] for _ in range(targets.shape[0])]
    counts = np.sum(np.isfinite(th), axis=0)
    for k in range(th.shape[0]):
        a = th[k, :-1]
        # neighbouring shots are compared modulo 2 pi (the meridian through the
        # vertex switches sweep sign without moving the crossing point)
        step = th[k, 1:] - a
        step = step - TWO_PI * np.round(step / TWO_PI)
        b = a + step
        # across a fold the k-th crossings of neighbours may belong to different
        # branches; accept those pairs only when their arclengths agree closely
        same_count = counts[:-1] == counts[1:]
        close_s = np.abs(ss[k, 1:] - ss[k, :-1]) < 1e-2 * (1.0 + np.abs(ss[k, :-1]))
        valid = np.isfinite(a) & np.isfinite(b) & (np.abs(step) < 0.5 * math.pi) & (same_count | close_s)
        idx = np.nonzero(valid)[0]
        if idx.size == 0:
            continue
        a, b = a[idx], b[idx]
        sa, sb = ss[k, idx], ss[k, idx + 1]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        for w in range(-winding_bound, winding_bound + 1):
            tgt = targets + TWO_PI * w
            hit = (lo[:, None] <= tgt[None, :]) & (tgt[None, :] <= hi[:, None])
            ii, pp = np.nonzero(hit)
            if ii.size == 0:
                continue
            den = b[ii] - a[ii]
            frac = np.where(den != 0.0, (tgt[pp] - a[ii]) / np.where(den != 0.0, den, 1.0), 0.5)
            troot = tt[idx[ii]] + frac * (tt[idx[ii] + 1] - tt[idx[ii]])
            sroot = sa[ii] + frac * (sb[ii] - sa[ii])
            for q, tr, sr, iv in zip(pp, troot, sroot, idx[ii]):
                res[q].append((float(tr), float(sr), int(iv), k, w))
    # dedupe grid-point roots shared by neighbouring intervals
    out = []
    for lst in res:
        lst.sort(key=lambda x: (x[0], x[1]))
        keep = []
        for item in lst:
            if keep and abs(item[0] - keep[-1][0]) < 1e-12 and abs(item[1] - keep[-1][1]) < 1e-9:
                continue
            keep.append(item)
        out.append(keep)
    return out


def _refine(surface, r0, t, th, ss, root, radius, target_theta, length):
    """Brent refinement of a fan root; falls back to the interpolated root."""
    tr, sr, iv, k, w = root
    n = t.shape[0]
    ta = t[iv]
    tb = t[iv + 1] if iv + 1 < n else t[0] + TWO_PI
    tgt = target_theta + TWO_PI * w
    cache = {}

    def f(x):
        thx, sx = surface._cross_theta(r0, x, radius, length, sr)
        cache[x] = sx
        return thx - tgt

    try:
        fa, fb = f(ta), f(tb)
        if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
            return tr, sr
        if fa == 0.0:
            return ta, cache[ta]
        if fb == 0.0:
            return tb, cache[tb]
        x = brentq(f, ta, tb, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=100)
        if x not in cache:
            f(x)
        return x, cache[x]
    except (ValueError, RuntimeError):
        return tr, sr


def _vertex_connection(surface, p, q):
    """Connections with an endpoint at or next to a vertex; None when neither is one.

    Within ``POLE_SNAP`` of a vertex the fan cannot resolve the target, so the
    flat chart about the vertex is used; its error is second order in the offset.
    """
    sc = surface.scale
    rmax = surface.r_max
    snap = POLE_SNAP * sc
    dth = _wrap(q.theta - p.theta)
    if q.r <= snap:
        d = p.r - q.r * math.cos(dth)
        t = math.pi - q.r * math.sin(dth) / float(surface.m(p.r)) if q.r > 0 else math.pi
        return Connection(d, [_wrap(t)], [d])
    if surface.compact and q.r >= rmax - snap:
        rho = max(rmax - q.r, 0.0)
        d = rmax - p.r - rho * math.cos(dth)
        t = rho * math.sin(dth) / float(surface.m(p.r))
        return Connection(d, [t], [d])
    if p.r == 0.0 or (surface.compact and p.r >= rmax):
        raise DomainError("shooting from a vertex is not supported; swap the endpoints")
    if p.r <= snap:
        d = q.r - p.r * math.cos(dth)
        return Connection(d, [dth], [d])
    if surface.compact and p.r >= rmax - snap:
        d = (rmax - q.r) - (rmax - p.r) * math.cos(dth)
        return Connection(d, [_wrap(math.pi - dth)], [d])
    return None


def connect(surface: ProfileSurface, p: SurfacePoint, q: SurfacePoint, winding_bound: int = 2,
            min_tol: float = 1e-6, hit_tol: float = 1e-7, n_dirs: int = 1440,
            refine: bool = True) -> Connection:
    """Distance from ``p`` to ``q`` and every minimal initial direction at ``p``."""
    surface.check_point(p)
    surface.check_point(q)
    if p.r == q.r and _wrap(p.theta - q.theta) == 0.0:
        raise DomainError("connect needs distinct points")
    special = _vertex_connection(surface, p, q)
    if special is not None:
        return special
    if _near_vertex(surface, q) and not _near_vertex(surface, p):
        # few shots from p reach a point this close to a vertex; shoot from q instead
        return _reversed(surface, q, p, winding_bound, min_tol, n_dirs, refine)
    sc = surface.scale
    r0, r1 = p.r / sc, q.r / sc
    dth = _wrap(q.theta - p.theta)
    m0 = float(surface.m(p.r)) / sc
    m1 = float(surface.m(q.r)) / sc
    chart = math.hypot(r1 - r0, 0.5 * (m0 + m1) * dth)
    if chart < 0.2 * min(m0, m1, 1.0):
        loc = _connect_local(surface, r0, r1, dth)
        if loc is not None:
            return Connection(loc[1] * sc, [loc[0]], [loc[1] * sc])
    length = _max_length(surface, r0, r1)
    t, cr = surface.fan(r0, [r1], length, n_dirs)
    th, ss = cr[0]
    roots = _fan_roots(t, th, ss, [dth % TWO_PI], winding_bound)[0]
    extra = _fold_roots(surface, r0, r1, t, th, ss, dth, length)
    if not roots and not extra:
        extra = _nearest_shot_roots(surface, r0, r1, t, th, ss, dth, length)
    if not roots and not extra:
        raise NonConvergenceError("no shooting solution reaches the target")
    conn = _select_minimal(surface, r0, t, th, ss, roots, r1, dth % TWO_PI, length, min_tol, refine, extra)
    conn.distance *= sc
    conn.lengths = [x * sc for x in conn.lengths]
    return conn


def _near_vertex(surface, p, span=1e-3):
    rh = p.r / surface.scale
    return rh < span or (surface.compact and surface.r_max_hat - rh < span)


def _reversed(surface, q, p, winding_bound, min_tol, n_dirs, refine):
    """Connection p -> q read off the geodesics q -> p, reversed at their far end."""
    c = connect(surface, q, p, winding_bound=winding_bound, min_tol=min_tol, n_dirs=n_dirs, refine=refine)
    sc = surface.scale
    mh = float(surface.m(p.r)) / sc
    dirs = []
    for t, s in zip(c.directions, c.lengths):
        out = surface._trace(surface._y0(surface.state(q, t)), s / sc, [s / sc], (), tol=1e-13)[0][-1]
        tp = math.atan2(-mh * out[3], -out[2])
        if not any(direction_angle(tp, o) < 1e-9 for o in dirs):
            dirs.append(tp)
    return Connection(c.distance, dirs, list(c.lengths[:len(dirs)]), c.degenerate)


def _max_length(surface, r0, r1):
    if surface.compact:
        return 2.0 * surface.r_max_hat + 0.5
    return r0 + r1 + 1.0


def _select_minimal(surface, r0, t, th, ss, roots, radius, target, length, min_tol, refine, extra=()):
    # ``extra`` holds already exact (t, s) roots, e.g. from fold Newton solves
    smin = min([r[1] for r in roots] + [x[1] for x in extra])
    band = [r for r in roots if r[1] <= smin * (1.0 + 1e-3) + 1e-9]
    spread = max(r[0] for r in band) - min(r[0] for r in band) if band else 0.0
    degenerate = len(band) > 8 and spread > 0.2
    if degenerate:
        # continuum of minimizers: keep a handful of representatives
        pick = [band[i] for i in np.linspace(0, len(band) - 1, 8).astype(int)]
        refined = [(r[0], r[1]) for r in pick]
    elif refine:
        refined = [_refine(surface, r0, t, th, ss, r, radius, target, length) for r in band]
    else:
        refined = [(r[0], r[1]) for r in band]
    refined += [x for x in extra if x[1] <= smin * (1.0 + 1e-3) + 1e-9]
    d = min(x[1] for x in refined)
    tolband = d * (1e-3 if degenerate else min_tol) + 1e-12
    keep = sorted([x for x in refined if x[1] <= d + tolband], key=lambda x: x[0])
    dirs = []
    lens = []
    for tr, sr in keep:
        tw = _wrap(tr)
        if any(direction_angle(tw, o) < 1e-9 for o in dirs):
            continue
        dirs.append(tw)
        lens.append(sr)
    return Connection(d, dirs, lens, degenerate)


def distance(surface: ProfileSurface, p: SurfacePoint, q: SurfacePoint, **kw) -> float:
    if p.r == q.r and _wrap(p.theta - q.theta) == 0.0:
        return 0.0
    return connect(surface, p, q, **kw).distance


# ---------------------------------------------------------------------------
# areas, asymptotics, rays
# ---------------------------------------------------------------------------

def ball_area(surface: ProfileSurface, R: float) -> float:
    """Area of the ball of radius ``R`` about the vertex: ``2 pi int_0^R m dr``."""
    if R < 0 or (surface.compact and R > surface.r_max * (1 + 1e-12)):
        raise DomainError(f"R = {R} outside the surface")
    sc = surface.scale
    Rh = min(R / sc, surface.r_max_hat)
    if surface.kind == kernel.PLANE:
        val = 0.5 * Rh * Rh
    elif surface.kind == kernel.TABLE:
        val = quad(lambda r: float(surface._table.m(r)), 0.0, Rh, epsabs=0, epsrel=1e-11, limit=500)[0]
    else:
        # substitute r -> u: dr = speed(u) du
        uR = float(surface.u_hat(Rh)) if Rh < surface.r_max_hat else math.pi
        if surface.kind == kernel.HYPERBOLOID:
            f = lambda u: u * float(surface._speed(u))
        else:
            f = lambda u: math.sin(u) * float(surface._speed(u))
        val = quad(f, 0.0, uR, epsabs=0, epsrel=1e-12, limit=500)[0]
    return TWO_PI * val * sc * sc


def total_curvature_quadrature(surface: ProfileSurface) -> float:
    """``int K dM`` by direct quadrature of ``2 pi int K m dr``."""
    if surface.kind == kernel.PLANE:
        return 0.0
    if surface.kind == kernel.TABLE:
        tb = surface._table
        return TWO_PI * quad(lambda r: float(tb.curvature(r) * tb.m(r)), 0.0, tb.r_end, limit=500)[0]
    a2 = surface.pa ** 2
    if surface.kind == kernel.HYPERBOLOID:
        # K m dr in the parameter rho = u
        f = lambda u: a2 * u * float(surface._speed(u)) / (u * u + 1.0 + a2 * u * u) ** 2
        return TWO_PI * quad(f, 0.0, math.inf, epsabs=1e-13, epsrel=1e-12, limit=500)[0]
    f = lambda u: a2 * math.sin(u) * float(surface._speed(u)) / (a2 * math.sin(u) ** 2 + math.cos(u) ** 2) ** 2
    return TWO_PI * quad(f, 0.0, math.pi, epsabs=1e-13, epsrel=1e-12, limit=500)[0]


def asymptotic_profile(surface: ProfileSurface, ladder=(100.0, 200.0, 400.0), tol: float = 1e-6) -> dict:
    """Limit of ``m'`` and the growth quantities it determines.

    ``m'(T)`` over the ``T`` ladder (in units of the surface scale) is
    Richardson-extrapolated twice: the deviation ``m'(T) - c`` has a ``T^-2``
    leading term and a ``T^-3`` correction from the offset of ``r`` against
    the profile parameter.
    """
    if surface.compact:
        raise DomainError("asymptotic profile needs a noncompact surface")
    ladder = [float(T) for T in ladder]
    while True:
        vals = [float(surface.m_prime(T * surface.scale)) for T in ladder]
        ext = [(4.0 * vals[i + 1] - vals[i]) / 3.0 for i in range(len(vals) - 1)]
        if len(ext) < 2:
            break
        ext2 = (8.0 * ext[-1] - ext[-2]) / 7.0
        resid = abs(ext2 - ext[-1])
        ext.append(ext2)
        if resid <= tol:
            break
        # push the ladder outward (doubling) while the profile span allows
        if 2.0 * ladder[-1] > 0.5 * R_SPAN:
            raise NonConvergenceError("m' ladder has not stabilized", resid)
        ladder = [2.0 * T for T in ladder]
    c = ext[-1] if ext else vals[-1]
    return {
        "m_prime_limit": c,
        "total_curvature": TWO_PI * (1.0 - c),
        "ideal_boundary_length": TWO_PI * c,
        "v_inf": math.pi * c,
        "total_curvature_quadrature": total_curvature_quadrature(surface),
        "ladder": vals,
        "ladder_T": ladder,
    }


def geodesic_points(surface: ProfileSurface, p: SurfacePoint, t: float, s_list):
    """Points at arclengths ``s_list`` along the geodesic from ``p`` in direction ``t``."""
    st = surface.state(p, t)
    sc = surface.scale
    s_hat = np.sort(np.asarray(s_list, dtype=float)) / sc
    out, _, _, _ = surface._trace(surface._y0(st), float(s_hat[-1]), s_hat, ())
    return [SurfacePoint(row[0] * sc, row[1] % TWO_PI) for row in out]


def is_ray(surface: ProfileSurface, p: SurfacePoint, direction: float, horizon: float,
           tol: float = 1e-3, n_dirs: int = 1440) -> bool:
    """Minimality certificate up to ``horizon`` at checkpoints h/4, h/2, h."""
    checks = [0.25 * horizon, 0.5 * horizon, horizon]
    pts = geodesic_points(surface, p, direction, checks)
    sc = surface.scale
    r0 = p.r / sc
    radii = [x.r / sc for x in pts]
    length = _max_length(surface, r0, max(radii)) if not surface.compact else _max_length(surface, r0, 0)
    t, cr = surface.fan(r0, radii, length, n_dirs)
    for j, (x, s_check) in enumerate(zip(pts, checks)):
        if surface.compact and x.r >= surface.r_max * (1 - 1e-12):
            d = surface.r_max - p.r
        elif x.r <= 0.0:
            d = p.r
        else:
            th, ss = cr[j]
            target = _wrap(x.theta - p.theta) % TWO_PI
            roots = _fan_roots(t, th, ss, [target], 2)[0]
            extra = _fold_roots(surface, r0, radii[j], t, th, ss, target, length)
            if not roots and not extra:
                raise NonConvergenceError("is_ray: checkpoint not reached by the shooting fan")
            d = _select_minimal(surface, r0, t, th, ss, roots, radii[j], target, length, 1e-6, True,
                                extra).distance * sc
        if d < s_check - tol:
            return False
    return True


def ray_measure(surface: ProfileSurface, p: SurfacePoint, horizon: float = 50.0, tol: float = 1e-3,
                resolution: float = 1e-3, n_scan: int = 64) -> dict:
    """Measure of the initial directions at ``p`` that pass :func:`is_ray`.

    A coarse scan of ``n_scan`` directions is followed by bisection of each
    status change down to ``resolution``.  Returns ``{"lower", "upper"}``.
    """
    if surface.compact:
        raise DomainError("ray measure needs a noncompact surface")
    ts = -math.pi + TWO_PI * np.arange(n_scan) / n_scan
    status = [is_ray(surface, p, float(t), horizon, tol) for t in ts]
    lower = 0.0
    upper = 0.0
    step = TWO_PI / n_scan
    for i in range(n_scan):
        a, b = float(ts[i]), float(ts[i]) + step
        sa, sb = status[i], status[(i + 1) % n_scan]
        if sa and sb:
            lower += step
            upper += step
            continue
        if not sa and not sb:
            continue
        # one boundary inside [a, b]: bisect it
        lo, hi = a, b
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            if is_ray(surface, p, mid, horizon, tol) == sa:
                lo = mid
            else:
                hi = mid
        if sa:
            lower += lo - a
            upper += hi - a
        else:
            lower += b - hi
            upper += b - lo
    return {"lower": lower, "upper": upper}


def compact_extents(surface: ProfileSurface, n_r: int = 9, n_theta: int = 24, n_dirs: int = 720) -> dict:
    """Sampled diameter, radius and normalized volume of a compact surface."""
    if not surface.compact:
        raise DomainError("compact_extents needs a compact surface")
    sc = surface.scale
    rmax = surface.r_max_hat
    levels = rmax * np.arange(1, n_r + 1) / (n_r + 1)
    thetas = TWO_PI * np.arange(n_theta) / n_theta
    eccs = [rmax]  # eccentricity of the vertex p0
    for r0 in levels:
        ecc = max(r0, rmax - r0)
        length = _max_length(surface, r0, 0)
        t, cr = surface.fan(float(r0), [float(x) for x in levels], length, n_dirs)
        for j in range(len(levels)):
            th, ss = cr[j]
            targets = [x for x in thetas if not (levels[j] == r0 and x == 0.0)]
            roots = _fan_roots(t, th, ss, targets, 1)
            for tgt, rts in zip(targets, roots):
                extra = _fold_roots(surface, float(r0), float(levels[j]), t, th, ss, tgt, length)
                if not rts and not extra:
                    continue
                conn = _select_minimal(surface, float(r0), t, th, ss, rts, float(levels[j]), tgt, length,
                                       1e-6, False, extra)
                ecc = max(ecc, conn.distance)
        eccs.append(ecc)
    diameter = float(max(eccs)) * sc
    radius = float(min(eccs)) * sc
    area = ball_area(surface, surface.r_max)
    return {"diameter": diameter, "radius": radius, "normalized_volume": area / diameter ** 2,
            "area": area}
