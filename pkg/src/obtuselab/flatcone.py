"""Euclidean cones over a circle of length ``link_length``.

Points are ``(rho, phi)`` with ``phi`` taken modulo the link length.  A
minimal segment is found by unrolling the cone along the shorter angular
gap; directions at a point are measured from the outward radial direction,
positive toward increasing ``phi`` (the same convention as the meridian
angle on surfaces of revolution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, SpecError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FlatCone:
    link_length: float

    def __post_init__(self):
        ell = self.link_length
        if not (0.0 < ell <= TWO_PI * (1 + 1e-15) and math.isfinite(ell)):
            raise SpecError(f"cone link length must lie in (0, 2*pi], got {ell}", "length")


@dataclass(frozen=True)
class ConePoint:
    rho: float
    phi: float = 0.0

    def __post_init__(self):
        if not (self.rho >= 0.0 and math.isfinite(self.rho) and math.isfinite(self.phi)):
            raise DomainError(f"invalid cone point ({self.rho}, {self.phi})")


@dataclass
class ConeConnection:
    distance: float
    directions_p: list       # directions at p (empty when p is the apex and q is too)
    directions_q: list
    through_apex: bool


def _gap(cone, p, q):
    """Signed shorter gap from p to q, and whether both ways tie."""
    ell = cone.link_length
    d = (q.phi - p.phi) % ell
    other = ell - d
    if d < other:
        return d, False
    if other < d:
        return -other, False
    return d, True


def cone_distance(cone: FlatCone, p: ConePoint, q: ConePoint) -> float:
    psi = abs(_gap(cone, p, q)[0])
    if psi >= math.pi:
        return p.rho + q.rho
    return math.sqrt((p.rho - q.rho) ** 2 + 4.0 * p.rho * q.rho * math.sin(0.5 * psi) ** 2)


def _direction(r1, r2, psi):
    """Direction at (r1, 0) of the segment to (r2, psi) in the unrolled plane."""
    return math.atan2(r2 * math.sin(psi), r2 * math.cos(psi) - r1)


def _apex_dir(cone, phi):
    return phi % cone.link_length


def cone_connect(cone: FlatCone, p: ConePoint, q: ConePoint) -> ConeConnection:
    """Distance plus every minimal direction at both endpoints.

    At the apex a direction is a link angle in ``[0, link_length)``.  When the
    minimizer runs through the apex the radial directions at p and q are
    returned and ``through_apex`` is set.
    """
    if p.rho == q.rho and (p.rho == 0.0 or (q.phi - p.phi) % cone.link_length == 0.0):
        raise DomainError("cone_connect needs distinct points")
    d = cone_distance(cone, p, q)
    if p.rho == 0.0:
        return ConeConnection(d, [_apex_dir(cone, q.phi)], [math.pi], True)
    if q.rho == 0.0:
        return ConeConnection(d, [math.pi], [_apex_dir(cone, p.phi)], True)
    g, tie = _gap(cone, p, q)
    if abs(g) >= math.pi:
        return ConeConnection(d, [math.pi], [math.pi], True)
    gaps = [g, g - cone.link_length] if tie else [g]
    dp = [_direction(p.rho, q.rho, x) for x in gaps]
    dq = [_direction(q.rho, p.rho, -x) for x in gaps]
    return ConeConnection(d, dp, dq, False)


def direction_angle(a: float, b: float) -> float:
    """Angle between two directions at a non-apex point (full circle of directions)."""
    x = abs(a - b) % TWO_PI
    return min(x, TWO_PI - x)


def cone_angle(cone: FlatCone, at: ConePoint, a: float, b: float) -> float:
    """Angle between directions ``a``, ``b`` at ``at`` (link angles at the apex)."""
    if at.rho == 0.0:
        ell = cone.link_length
        x = abs(a - b) % ell
        return min(x, ell - x, math.pi)
    return direction_angle(a, b)


# ---------------------------------------------------------------------------
# exact obtuse constant from infinity
# ---------------------------------------------------------------------------

def _far_gap(ell, phi_pt, phi):
    """Signed gap from a point at ``phi_pt`` to the far direction ``phi``; ties give both."""
    d = (phi - phi_pt) % ell
    return d if d <= ell - d else d - ell


def _limit_comparison(cone, p, q, dpq, phi):
    # |x,p| - |x,q| -> rho_q cos(gap_q) - rho_p cos(gap_p) as x -> infinity along phi
    ell = cone.link_length
    gp = _far_gap(ell, p.phi, phi)
    gq = _far_gap(ell, q.phi, phi)
    bp = -p.rho * math.cos(gp) if p.rho > 0 else 0.0
    bq = -q.rho * math.cos(gq) if q.rho > 0 else 0.0
    c = min(1.0, max(-1.0, (bp - bq) / dpq))
    return math.acos(c), math.acos(min(1.0, max(-1.0, (bq - bp) / dpq)))


def _maximize_on_link(f, ell, breaks, n_grid=4096):
    """Max of a piecewise-smooth function of the link angle."""
    grid = np.concatenate([np.linspace(0.0, ell, n_grid, endpoint=False), np.asarray(breaks) % ell])
    vals = np.array([f(x) for x in grid])
    order = np.argsort(vals)[::-1][:6]
    best = float(vals[order[0]])
    h = ell / n_grid
    for i in order:
        x0 = float(grid[i])
        res = minimize_scalar(lambda x: -f(x), bounds=(x0 - h, x0 + h), method="bounded",
                              options={"xatol": 1e-13})
        best = max(best, -float(res.fun))
    return best


def _angle_side(ell, dirs_q, at_apex):
    """sup over far directions of the inf-angle to ``dirs_q``.

    Far directions at a non-apex point fill the closed arc [-ell/2, ell/2].
    """
    if at_apex:
        # directions at the apex form the link circle; far directions are all of it
        def dist(a, b):
            x = abs(a - b) % ell
            return min(x, ell - x, math.pi)
        cands = [(d + 0.5 * ell) % ell for d in dirs_q] + list(np.linspace(0, ell, 64, endpoint=False))
        return max(min(dist(c, d) for d in dirs_q) for c in cands)
    lo, hi = -0.5 * ell, 0.5 * ell
    cands = [lo, hi]
    for d in dirs_q:
        for off in (-TWO_PI, 0.0, TWO_PI):
            x = d + math.pi + off
            if lo <= x <= hi:
                cands.append(x)
            x = d - math.pi + off
            if lo <= x <= hi:
                cands.append(x)
    srt = sorted(dirs_q)
    for a, b in zip(srt, srt[1:] + [srt[0] + TWO_PI]):
        for off in (-TWO_PI, 0.0, TWO_PI):
            x = 0.5 * (a + b) + off
            if lo <= x <= hi:
                cands.append(x)
    return max(min(direction_angle(c, d) for d in dirs_q) for c in cands)


def cone_obtuse_inf_exact(cone: FlatCone, p: ConePoint, q: ConePoint, kappa: float = 0.0,
                          variant: str = "comparison") -> float:
    """Exact limsup over far x of ``max(angle at p, angle at q) - pi/2``.

    ``variant="comparison"`` uses the 0-comparison angles of the triangle
    ``x p q``; ``variant="angle"`` uses ``inf`` over minimal directions to the
    partner of the angle to the direction of ``x``.  Only ``kappa = 0`` is
    available on flat cones.
    """
    if kappa != 0.0:
        raise DomainError("the exact cone oracle is available for kappa = 0 only")
    ell = cone.link_length
    if variant == "comparison":
        dpq = cone_distance(cone, p, q)
        if dpq == 0.0:
            raise DomainError("cone_obtuse_inf_exact needs p != q")
        breaks = [p.phi + 0.5 * ell, q.phi + 0.5 * ell, p.phi, q.phi]
        val = _maximize_on_link(lambda x: max(_limit_comparison(cone, p, q, dpq, x)), ell, breaks)
        return val - 0.5 * math.pi
    if variant == "angle":
        conn = cone_connect(cone, p, q)
        a = _angle_side(ell, conn.directions_p, p.rho == 0.0)
        b = _angle_side(ell, conn.directions_q, q.rho == 0.0)
        return max(a, b) - 0.5 * math.pi
    raise DomainError(f"unknown variant {variant!r}")


def cone_ball_area(cone: FlatCone, R: float) -> float:
    return 0.5 * cone.link_length * R * R


def cone_v_inf(cone: FlatCone) -> float:
    return 0.5 * cone.link_length
