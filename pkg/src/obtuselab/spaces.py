"""Space adapters consumed by the obtuse-constant estimators.

A space exposes distances and, when it can, minimal directions and angles,
plus samplers for far points, extension points and test pairs.  Batch
queries go through :meth:`SpaceHandle.profile`, which returns the distances
from one point to many and (optionally) the minimal directions.
"""

from __future__ import annotations

import math

import numpy as np

from . import flatcone as fc
from . import revsurface as rs
from .errors import CapabilityError, DomainError
from .model_trig import HPoint, halfplane_distance, ideal_triangle_contains

TWO_PI = 2.0 * math.pi


class SpaceHandle:
    """Base adapter; subclasses fill in the capabilities they support."""

    capabilities = frozenset({"distance"})
    compact = False
    kind = "abstract"
    curvature_lower_bound = None

    def require(self, *caps):
        missing = [c for c in caps if c not in self.capabilities]
        if missing:
            raise CapabilityError(f"{self.kind} space lacks capabilities: {', '.join(missing)}")

    def distance(self, a, b) -> float:
        raise NotImplementedError

    def directions(self, p, q) -> list:
        self.require("angles")
        raise NotImplementedError

    def angle(self, at, d1, d2) -> float:
        self.require("angles")
        raise NotImplementedError

    def profile(self, p, xs, dirs=False, precise=False):
        """Distances from ``p`` to ``xs`` and, if ``dirs``, the minimal directions."""
        d = np.array([self.distance(p, x) for x in xs], dtype=float)
        return d, ([self.directions(p, x) for x in xs] if dirs else None)

    def far_samples(self, p, q, R, n) -> list:
        self.require("far_sampler")
        raise NotImplementedError

    def extension_samples(self, p, q, R) -> list:
        """Points beyond ``p`` on extensions of minimal geodesics from ``q`` (optional)."""
        return []

    def region_samples(self, p, q, n) -> list:
        self.require("region_sampler")
        raise NotImplementedError

    def radius(self) -> float:
        self.require("extents")
        raise NotImplementedError

    def default_far_radii(self, p, q) -> list:
        raise NotImplementedError

    def pair_population(self, delta, n_pairs, rng) -> list:
        raise NotImplementedError

    def random_pairs(self, n_pairs, rng) -> list:
        raise NotImplementedError

    def growth(self) -> dict:
        self.require("growth")
        raise NotImplementedError


# ---------------------------------------------------------------------------
# surfaces of revolution
# ---------------------------------------------------------------------------

class SurfaceSpace(SpaceHandle):
    kind = "surface"

    def __init__(self, surface: rs.ProfileSurface, n_dirs: int = 1440, base_radii=None,
                 region_grid=(12, 48)):
        self.surface = surface
        self.n_dirs = n_dirs
        self.compact = surface.compact
        self.curvature_lower_bound = 0.0 if surface.nonneg else None
        caps = {"distance", "angles", "far_sampler"}
        caps |= {"region_sampler", "extents"} if surface.compact else {"growth"}
        self.capabilities = frozenset(caps)
        sc = surface.scale
        if base_radii is None:
            if surface.compact:
                base_radii = surface.r_max_hat * np.linspace(0.1, 0.9, 12)
            else:
                base_radii = np.linspace(0.5, 6.0, 12)
            base_radii = [float(x) * sc for x in base_radii]
        self.base_radii = list(base_radii)
        self.region_grid = region_grid
        self._extents = None

    @property
    def scale(self):
        return self.surface.scale

    def distance(self, a, b):
        return rs.distance(self.surface, a, b, n_dirs=self.n_dirs)

    def directions(self, p, q):
        return list(rs.connect(self.surface, p, q, n_dirs=self.n_dirs).directions)

    def angle(self, at, d1, d2):
        return rs.direction_angle(d1, d2)

    def profile(self, p, xs, dirs=False, precise=False):
        S = self.surface
        sc = S.scale
        n = len(xs)
        dist = np.full(n, np.nan)
        dlist = [None] * n
        r0 = p.r / sc
        regular = []
        for i, x in enumerate(xs):
            if x.r == p.r and rs._wrap(x.theta - p.theta) == 0.0:
                dist[i], dlist[i] = 0.0, []
            elif x.r == 0.0 or (S.compact and x.r >= S.r_max) or p.r == 0.0 or (S.compact and p.r >= S.r_max):
                c = rs.connect(S, p, x, n_dirs=self.n_dirs)
                dist[i], dlist[i] = c.distance, c.directions
            else:
                regular.append(i)
        if regular:
            radii = sorted({xs[i].r / sc for i in regular})
            length = rs._max_length(S, r0, max(radii))
            t, cr = S.fan(r0, radii, length, self.n_dirs)
            index = {r: j for j, r in enumerate(radii)}
            groups = {}
            for i in regular:
                groups.setdefault(index[xs[i].r / sc], []).append(i)
            for j, members in groups.items():
                th, ss = cr[j]
                targets = [rs._wrap(xs[i].theta - p.theta) % TWO_PI for i in members]
                roots = rs._fan_roots(t, th, ss, targets, 2)
                for i, tgt, rts in zip(members, targets, roots):
                    extra = rs._fold_roots(S, r0, radii[j], t, th, ss, tgt, length)
                    if not rts and not extra:
                        # the shooting scan missed it: fall back to a full connect
                        c = rs.connect(S, p, xs[i], n_dirs=self.n_dirs)
                        dist[i], dlist[i] = c.distance, c.directions
                        continue
                    c = rs._select_minimal(S, r0, t, th, ss, rts, radii[j], tgt, length, 1e-6, precise,
                                           extra)
                    dist[i] = c.distance * sc
                    dlist[i] = c.directions
        return dist, (dlist if dirs else None)

    def far_samples(self, p, q, R, n):
        if self.compact:
            raise CapabilityError("far samples at infinity need a noncompact surface")
        th = TWO_PI * np.arange(n) / n
        return [rs.SurfacePoint(float(R), float((p.theta + x) % TWO_PI)) for x in th] + \
               [rs.SurfacePoint(float(R), float((q.theta + x) % TWO_PI)) for x in th]

    def extension_samples(self, p, q, R):
        S = self.surface
        sc = S.scale
        out = []
        if q.r == 0.0 or p.r == 0.0:
            return out
        conn = rs.connect(S, q, p, n_dirs=self.n_dirs)
        for t in conn.directions:
            st = S.state(q, t)
            y0 = S._y0(st)
            if S.compact:
                extra = np.linspace(0.5, 1.0, 6) * S.r_max_hat
                s_out = conn.distance / sc + extra
                res, _, _, _ = S._trace(y0, float(s_out[-1]), s_out, ())
                out += [rs.SurfacePoint(row[0] * sc, row[1] % TWO_PI) for row in res]
            else:
                Rh = R / sc
                length = conn.distance / sc + Rh + p.r / sc + 1.0
                _, ev, _, _ = S._trace(y0, length, (), [Rh])
                ev = ev[ev[:, 1] > conn.distance / sc]
                if ev.shape[0]:
                    out.append(rs.SurfacePoint(float(R), float(ev[0, 3] % TWO_PI)))
        return out

    def region_samples(self, p, q, n=None):
        S = self.surface
        nr, nt = self.region_grid
        rr = S.r_max * np.arange(1, nr + 1) / (nr + 1)
        pts = [rs.SurfacePoint(0.0, 0.0), rs.SurfacePoint(S.r_max, 0.0)]
        for r in rr:
            for k in range(nt):
                pts.append(rs.SurfacePoint(float(r), float((p.theta + TWO_PI * k / nt) % TWO_PI)))
        return pts

    def extents(self):
        if self._extents is None:
            self._extents = rs.compact_extents(self.surface)
        return self._extents

    def radius(self):
        return self.extents()["radius"]

    def default_far_radii(self, p, q):
        return [x * self.scale for x in (30.0, 100.0, 300.0, 1000.0)]

    def pair_population(self, delta, n_pairs, rng):
        """Base radii crossed with radial, parallel and diagonal offsets."""
        S = self.surface
        pairs = []
        for r in self.base_radii:
            m = float(S.m(r))
            h = delta / math.sqrt(2.0)
            pairs.append((rs.SurfacePoint(r, 0.0), rs.SurfacePoint(r + delta, 0.0)))
            pairs.append((rs.SurfacePoint(r, 0.0), rs.SurfacePoint(r, delta / m)))
            pairs.append((rs.SurfacePoint(r, 0.0), rs.SurfacePoint(r + h, h / m)))
        if n_pairs < len(pairs):
            idx = np.sort(rng.choice(len(pairs), size=n_pairs, replace=False))
            pairs = [pairs[i] for i in idx]
        return pairs

    def random_pairs(self, n_pairs, rng):
        lo, hi = min(self.base_radii), max(self.base_radii)
        out = []
        for _ in range(n_pairs):
            p = rs.SurfacePoint(float(rng.uniform(lo, hi)), 0.0)
            q = rs.SurfacePoint(float(rng.uniform(lo, hi)), float(rng.uniform(0.0, TWO_PI)))
            out.append((p, q))
        return out

    def growth(self):
        a = rs.asymptotic_profile(self.surface)
        return {k: a[k] for k in ("v_inf", "ideal_boundary_length", "total_curvature", "m_prime_limit",
                                   "total_curvature_quadrature")}


# ---------------------------------------------------------------------------
# flat cones
# ---------------------------------------------------------------------------

class ConeSpace(SpaceHandle):
    kind = "flat_cone"
    capabilities = frozenset({"distance", "angles", "far_sampler", "growth"})
    curvature_lower_bound = 0.0
    scale = 1.0

    def __init__(self, cone: fc.FlatCone):
        self.cone = cone

    def distance(self, a, b):
        return fc.cone_distance(self.cone, a, b)

    def directions(self, p, q):
        return fc.cone_connect(self.cone, p, q).directions_p

    def angle(self, at, d1, d2):
        return fc.cone_angle(self.cone, at, d1, d2)

    def profile(self, p, xs, dirs=False, precise=False):
        ell = self.cone.link_length
        rho = np.array([x.rho for x in xs], dtype=float)
        phi = np.array([x.phi for x in xs], dtype=float)
        d = (phi - p.phi) % ell
        other = ell - d
        psi = np.minimum(d, other)
        dist = np.where(psi >= math.pi, p.rho + rho,
                        np.sqrt((p.rho - rho) ** 2 + 4.0 * p.rho * rho * np.sin(0.5 * psi) ** 2))
        if not dirs:
            return dist, None
        out = []
        if p.rho == 0.0:
            out = [[x % ell] for x in phi]
            return dist, out
        g1 = np.where(d <= other, d, -other)
        for i in range(len(xs)):
            if rho[i] == 0.0 or psi[i] >= math.pi:
                out.append([math.pi])
                continue
            # far samples sit exactly opposite p on the link; keep both ways despite roundoff
            tie = abs(d[i] - other[i]) <= 1e-12 * ell
            gaps = [d[i], -other[i]] if tie else [g1[i]]
            out.append([math.atan2(rho[i] * math.sin(g), rho[i] * math.cos(g) - p.rho) for g in gaps])
        return dist, out

    def far_samples(self, p, q, R, n):
        ell = self.cone.link_length
        k = np.arange(n) / n * ell
        return [fc.ConePoint(float(R), float((p.phi + x) % ell)) for x in k] + \
               [fc.ConePoint(float(R), float((q.phi + x) % ell)) for x in k]

    def extension_samples(self, p, q, R):
        """Far points on the straight continuation of the segment q -> p beyond p."""
        if p.rho == 0.0 or q.rho == 0.0:
            return []
        ell = self.cone.link_length
        out = []
        for dq in fc.cone_connect(self.cone, p, q).directions_p:
            a = dq + math.pi
            # unrolled: p at (rho_p, 0), moving along (cos a, sin a); reach |.| = R
            b = p.rho * math.cos(a)
            s = -b + math.sqrt(b * b - p.rho ** 2 + R * R)
            x, y = p.rho + s * math.cos(a), s * math.sin(a)
            psi = math.atan2(y, x)
            out.append(fc.ConePoint(float(R), float((p.phi + psi) % ell)))
        return out

    def default_far_radii(self, p, q):
        d = self.distance(p, q)
        return [d * 10.0 ** k for k in (3, 4, 5, 6)]

    def pair_population(self, delta, n_pairs, rng):
        ell = self.cone.link_length
        out = []
        for _ in range(n_pairs):
            p = fc.ConePoint(float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.0, ell)))
            out.append((p, _cone_offset(self.cone, p, delta, float(rng.uniform(-math.pi, math.pi)))))
        return out

    def random_pairs(self, n_pairs, rng):
        ell = self.cone.link_length
        out = []
        for _ in range(n_pairs):
            p = fc.ConePoint(float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.0, ell)))
            q = fc.ConePoint(float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.0, ell)))
            out.append((p, q))
        return out

    def growth(self):
        ell = self.cone.link_length
        return {"v_inf": fc.cone_v_inf(self.cone), "ideal_boundary_length": ell,
                "total_curvature": TWO_PI - ell}


def _cone_offset(cone, p, delta, alpha):
    """Point at distance ``delta`` from ``p`` in direction ``alpha`` (delta < rho_p)."""
    x, y = p.rho + delta * math.cos(alpha), delta * math.sin(alpha)
    return fc.ConePoint(math.hypot(x, y), (p.phi + math.atan2(y, x)) % cone.link_length)


# ---------------------------------------------------------------------------
# ideal triangle in the hyperbolic plane
# ---------------------------------------------------------------------------

def _mobius(z):
    """Rotation of the ideal triangle: 0 -> inf -> 1 -> 0."""
    return 1.0 - 1.0 / z


class IdealTriangleSpace(SpaceHandle):
    """Closed ideal triangle with vertices 0, 1, inf (a convex subset of the hyperbolic plane)."""

    kind = "hyperbolic_ideal_triangle"
    capabilities = frozenset({"distance", "far_sampler"})
    curvature_lower_bound = -1.0
    scale = 1.0

    def distance(self, a, b):
        return halfplane_distance(a, b)

    def profile(self, p, xs, dirs=False, precise=False):
        x = np.array([z.x for z in xs])
        y = np.array([z.y for z in xs])
        h = ((p.x - x) ** 2 + (p.y - y) ** 2) / (4.0 * p.y * y)
        return 2.0 * np.arcsinh(np.sqrt(h)), None

    def far_samples(self, p, q, R, n):
        """Points of height ``e^R`` in each of the three cusps."""
        per = max(1, n // 3)
        xs = (np.arange(per) + 0.5) / per
        top = [complex(float(x), math.exp(R)) for x in xs]
        pts = []
        for z in top:
            w1 = _mobius(z)
            w2 = _mobius(w1)
            for w in (z, w1, w2):
                pt = HPoint(w.real, w.imag)
                if ideal_triangle_contains(pt, tol=1e-12):
                    pts.append(pt)
        return pts

    def default_far_radii(self, p, q):
        return [5.0, 10.0, 15.0, 20.0]

    def _interior(self, rng):
        while True:
            pt = HPoint(float(rng.uniform(0.1, 0.9)), float(rng.uniform(0.6, 2.0)))
            if ideal_triangle_contains(pt) and (pt.x - 0.5) ** 2 + pt.y ** 2 > 0.3:
                return pt

    def pair_population(self, delta, n_pairs, rng):
        out = []
        while len(out) < n_pairs:
            p = self._interior(rng)
            a = float(rng.uniform(-math.pi, math.pi))
            # nominal step of hyperbolic length ~delta
            q = HPoint(p.x + p.y * delta * math.cos(a), p.y * math.exp(delta * math.sin(a)))
            if ideal_triangle_contains(q):
                out.append((p, q))
        return out

    def random_pairs(self, n_pairs, rng):
        return [(self._interior(rng), self._interior(rng)) for _ in range(n_pairs)]


def space_from_spec(spec: dict, **kw) -> SpaceHandle:
    kind = spec.get("type")
    if kind == "flat_cone":
        if "length" not in spec:
            from .errors import SpecError
            raise SpecError("flat_cone needs 'length'", "length")
        return ConeSpace(fc.FlatCone(float(spec["length"])))
    if kind == "hyperbolic_ideal_triangle":
        return IdealTriangleSpace()
    return SurfaceSpace(rs.make_surface(spec), **kw)
