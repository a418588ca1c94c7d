"""Trigonometry of the constant-curvature model planes.

All formulas are written in half-angle form so that nearly degenerate
triangles (thin, or with one vertex far away) keep full relative precision.
For ``|kappa| < KAPPA_EPS`` every routine uses the Euclidean closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InvalidTriangleError

KAPPA_EPS = 1e-12
CLAMP_EPS = 1e-12
# sqrt(-kappa) * length beyond this overflows sinh products
SINH_ARG_CAP = 350.0


@dataclass(frozen=True)
class HPoint:
    """Point of the upper half-plane model of the hyperbolic plane."""

    x: float
    y: float

    def __post_init__(self):
        if not (self.y > 0 and math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"half-plane point needs finite x and y > 0, got ({self.x}, {self.y})")


def _check_kappa(kappa):
    if not math.isfinite(kappa):
        raise DomainError(f"curvature must be finite, got {kappa}")


def _sinh_guard(k, *lengths):
    for s in lengths:
        if k * s > SINH_ARG_CAP:
            raise DomainError(f"sqrt(-kappa)*length = {k * s:.3g} exceeds overflow cap {SINH_ARG_CAP}")


def model_side(kappa: float, a: float, b: float, gamma: float) -> float:
    """Third side of the kappa-plane triangle with sides a, b and included angle gamma."""
    _check_kappa(kappa)
    if a < 0 or b < 0:
        raise DomainError(f"side lengths must be nonnegative, got {a}, {b}")
    if not 0.0 <= gamma <= math.pi:
        raise DomainError(f"angle must lie in [0, pi], got {gamma}")
    s2 = math.sin(0.5 * gamma) ** 2
    if abs(kappa) < KAPPA_EPS:
        return math.sqrt((a - b) ** 2 + 4.0 * a * b * s2)
    if kappa < 0:
        k = math.sqrt(-kappa)
        _sinh_guard(k, a, b)
        h = math.sinh(0.5 * k * (a - b)) ** 2 + math.sinh(k * a) * math.sinh(k * b) * s2
        return 2.0 * math.asinh(math.sqrt(h)) / k
    k = math.sqrt(kappa)
    if k * a > math.pi + CLAMP_EPS or k * b > math.pi + CLAMP_EPS:
        raise DomainError(f"sides must not exceed pi/sqrt(kappa) = {math.pi / k}")
    h = math.sin(0.5 * k * (a - b)) ** 2 + math.sin(k * a) * math.sin(k * b) * s2
    return 2.0 * math.asin(math.sqrt(min(max(h, 0.0), 1.0))) / k


def _half_angle_terms(kappa, a, b, c):
    """Return (sin^2(g/2), cos^2(g/2)) numerators and a common denominator."""
    if abs(kappa) < KAPPA_EPS:
        den = 4.0 * a * b
        return (c - a + b) * (c + a - b), (a + b - c) * (a + b + c), den
    if kappa < 0:
        k = math.sqrt(-kappa)
        _sinh_guard(k, a, b, c)
        den = math.sinh(k * a) * math.sinh(k * b)
        hc = math.sinh(0.5 * k * c) ** 2
        return hc - math.sinh(0.5 * k * (a - b)) ** 2, math.sinh(0.5 * k * (a + b)) ** 2 - hc, den
    k = math.sqrt(kappa)
    den = math.sin(k * a) * math.sin(k * b)
    hc = math.sin(0.5 * k * c) ** 2
    return hc - math.sin(0.5 * k * (a - b)) ** 2, math.sin(0.5 * k * (a + b)) ** 2 - hc, den


def check_side_triple(kappa: float, sides) -> None:
    a, b, c = sides
    if min(a, b, c) < 0 or not all(map(math.isfinite, (a, b, c))):
        raise InvalidTriangleError(f"sides must be finite and nonnegative, got {sides}")
    tol = CLAMP_EPS * max(1.0, a + b + c)
    if a > b + c + tol or b > a + c + tol or c > a + b + tol:
        raise InvalidTriangleError(f"triangle inequality fails for {sides}")
    if kappa > KAPPA_EPS and a + b + c >= 2.0 * math.pi / math.sqrt(kappa) + tol:
        raise InvalidTriangleError(f"perimeter {a + b + c} reaches 2*pi/sqrt(kappa)")


def comparison_angle(kappa: float, sides, opposite: int = 2) -> float:
    """Angle of the kappa-comparison triangle opposite ``sides[opposite]``.

    A degenerate triangle with the opposite side equal to the sum of the
    other two gets the angle pi (limit by continuity).
    """
    _check_kappa(kappa)
    check_side_triple(kappa, sides)
    c = sides[opposite]
    a, b = (sides[i] for i in range(3) if i != opposite)
    if a <= 0 or b <= 0:
        raise InvalidTriangleError(f"sides adjacent to the angle must be positive, got {a}, {b}")
    sin_num, cos_num, den = _half_angle_terms(kappa, a, b, c)
    if den <= 0:
        raise InvalidTriangleError(f"degenerate comparison triangle {sides} for kappa={kappa}")
    s2 = sin_num / den
    c2 = cos_num / den
    if s2 < -CLAMP_EPS or c2 < -CLAMP_EPS:
        raise InvalidTriangleError(f"no comparison triangle for {sides} at kappa={kappa}")
    if s2 <= 0.5:
        return 2.0 * math.asin(math.sqrt(min(max(s2, 0.0), 1.0)))
    return 2.0 * math.acos(math.sqrt(min(max(c2, 0.0), 1.0)))


def comparison_angle_at(kappa: float, adj1: float, adj2: float, opp: float) -> float:
    """Comparison angle between adjacent sides ``adj1``, ``adj2`` facing ``opp``."""
    return comparison_angle(kappa, (adj1, adj2, opp), opposite=2)


def tangent_cone_distance(kappa: float, s: float, t: float, alpha: float) -> float:
    """Distance between (xi, s) and (eta, t) in the kappa-tangent cone, angle(xi, eta) = alpha."""
    if kappa > KAPPA_EPS:
        raise DomainError("the kappa-tangent cone metric is defined for kappa <= 0")
    return model_side(kappa, s, t, alpha)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, h):
        return h * (fa + 4.0 * fm + fb) / 6.0

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, max_depth)


def sphere_area(n: int) -> float:
    """Hausdorff measure of the unit sphere S^(n-1)."""
    return 2.0 * math.pi ** (0.5 * n) / math.gamma(0.5 * n)


def _cap_measure(n, radius):
    # common factor H(S^(n-2)) cancels in theta_n
    if n == 2:
        return radius
    return adaptive_simpson(lambda t: math.sin(t) ** (n - 2), 0.0, radius, tol=1e-12)


def theta_n(n: int, eps: float) -> float:
    """Relative measure of the band of half-width eps about a great sphere.

    ``(cap(pi/2 + eps) - cap(pi/2 - eps)) / cap(pi/2 + eps)`` on S^(n-1).
    """
    if int(n) != n or n < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {n}")
    if not 0.0 <= eps <= 0.5 * math.pi:
        raise DomainError(f"eps must lie in [0, pi/2], got {eps}")
    outer = _cap_measure(int(n), 0.5 * math.pi + eps)
    inner = _cap_measure(int(n), 0.5 * math.pi - eps)
    return min(max((outer - inner) / outer, 0.0), 1.0)


def strainer_constants(n: int, d_bound: float, r_min: float, v1: float, tol: float = 1e-9) -> dict:
    """The volume constant C1 and the angle eps solving C1*H(S^(n-1))*theta_n(eps) <= v1/2."""
    if int(n) != n or n < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {n}")
    if not d_bound > 0:
        raise DomainError(f"D must be positive, got {d_bound}")
    if not 0.5 <= r_min <= 1.0:
        raise DomainError(f"r_min must lie in [1/2, 1], got {r_min}")
    if not v1 > 0:
        raise DomainError(f"v1 must be positive, got {v1}")
    n = int(n)
    c1 = adaptive_simpson(lambda s: (math.sinh(d_bound * s) / d_bound) ** (n - 1),
                          0.5 * r_min, 1.0, tol=1e-12)
    scale = c1 * sphere_area(n)

    def ok(eps):
        return scale * theta_n(n, eps) <= 0.5 * v1

    hi = 0.5 * math.pi
    if ok(hi):
        return {"c1": c1, "eps": hi}
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return {"c1": c1, "eps": lo}


def halfplane_distance(p: HPoint, q: HPoint) -> float:
    """Hyperbolic distance in the upper half-plane (curvature -1)."""
    h = ((p.x - q.x) ** 2 + (p.y - q.y) ** 2) / (4.0 * p.y * q.y)
    return 2.0 * math.asinh(math.sqrt(h))


def ideal_triangle_contains(p: HPoint, tol: float = 0.0) -> bool:
    """Membership in the closed ideal triangle with vertices 0, 1 and infinity."""
    return (-tol <= p.x <= 1.0 + tol) and (p.x - 0.5) ** 2 + p.y ** 2 >= 0.25 - tol
