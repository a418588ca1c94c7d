import math

import numpy as np
import pytest

from obtuselab import flatcone as fc, revsurface as rs
from obtuselab.errors import CapabilityError, DomainError
from obtuselab.invariants import (CONVENTION_NOTES, ComparisonQuery, growth_report, kappa_obtuse_infinity,
                                  obtuse_compact, obtuse_from_infinity, pair_obtuse_angle, pair_obtuse_both,
                                  pair_obtuse_comparison, safe_comparison_angle)
from obtuselab.model_trig import HPoint
from obtuselab.spaces import ConeSpace, IdealTriangleSpace, SurfaceSpace, space_from_spec

HALF_PI = 0.5 * math.pi
P = rs.SurfacePoint


@pytest.fixture(scope="module")
def plane():
    return SurfaceSpace(rs.make_surface({"type": "plane"}))


@pytest.fixture(scope="module")
def hyp1():
    return SurfaceSpace(rs.make_surface({"type": "hyperboloid", "a": 1.0}))


def test_query_validation():
    with pytest.raises(DomainError):
        ComparisonQuery(None, None, far_radii=(10.0, 5.0))
    with pytest.raises(DomainError):
        ComparisonQuery(None, None, samples_per_radius=0)


def test_safe_comparison_angle():
    assert safe_comparison_angle(0.0, 3, 4, 5) == pytest.approx(HALF_PI)
    # within the relative slack the triangle is accepted as degenerate
    assert safe_comparison_angle(0.0, 1.0, 1.0, 2.0 + 1e-9) == pytest.approx(math.pi)
    assert math.isnan(safe_comparison_angle(0.0, 1.0, 1.0, 2.1))


def test_plane_pair_values(plane):
    q = ComparisonQuery(P(1.0, 0.0), P(1.5, 0.4), far_radii=(30.0, 100.0), samples_per_radius=180)
    both = pair_obtuse_both(plane, q)
    assert both["angle"].value == pytest.approx(HALF_PI, abs=1e-9)
    # a degenerate far triangle: distance roundoff of ~1e-14 relative costs ~sqrt of it in angle
    assert both["comparison"].value == pytest.approx(HALF_PI, abs=1e-5)
    assert pair_obtuse_comparison(plane, q).value == pytest.approx(both["comparison"].value, abs=1e-12)
    assert pair_obtuse_angle(plane, q).value == pytest.approx(both["angle"].value, abs=1e-12)


def test_hyperboloid_close_pair(hyp1):
    q = ComparisonQuery(P(2.0, 0.0), P(2.0, 0.01 / float(hyp1.surface.m(2.0))),
                        far_radii=(30.0, 100.0, 300.0, 1000.0))
    both = pair_obtuse_both(hyp1, q)
    assert both["angle"].value >= HALF_PI - 0.05
    assert both["comparison"].value >= HALF_PI - 0.05


@pytest.mark.parametrize("ell", [0.5 * math.pi, math.pi])
def test_cone_pairs_match_exact_oracle(ell):
    space = ConeSpace(fc.FlatCone(ell))
    rng = np.random.default_rng(7)
    for p, q in space.random_pairs(6, rng):
        both = pair_obtuse_both(space, ComparisonQuery(p, q))
        for v in ("comparison", "angle"):
            exact = fc.cone_obtuse_inf_exact(space.cone, p, q, variant=v)
            assert both[v].value == pytest.approx(exact, abs=1e-3)


def test_cone_ladder_converges_to_oracle():
    space = ConeSpace(fc.FlatCone(0.5 * math.pi))
    p, q = fc.ConePoint(1.3, 0.2), fc.ConePoint(0.7, 1.1)
    est = pair_obtuse_comparison(space, ComparisonQuery(p, q))
    lad = est.ladder_values
    assert len(lad) == 4
    # on a cone the per-radius maxima approach the limit from above
    assert all(b < a for a, b in zip(lad, lad[1:]))
    assert lad[-1] == pytest.approx(fc.cone_obtuse_inf_exact(space.cone, p, q), abs=1e-6)


def test_obtuse_from_infinity_plane(plane):
    est = obtuse_from_infinity(plane, [0.1, 0.01], ComparisonQuery(None, None, far_radii=(30.0, 100.0),
                                                                   samples_per_radius=90),
                               variant="angle", n_pairs=4)
    assert est.value == pytest.approx(HALF_PI, abs=1e-9)
    assert est.uncertainty == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(DomainError):
        obtuse_from_infinity(plane, [0.01, 0.1], ComparisonQuery(None, None), n_pairs=2)


def test_cone_pi_boundary_case():
    space = ConeSpace(fc.FlatCone(math.pi))
    est = obtuse_from_infinity(space, [0.1, 0.03], ComparisonQuery(None, None), variant="angle", n_pairs=8)
    assert est.value == pytest.approx(HALF_PI, abs=1e-3)


def test_kappa_obtuse_cone_matches_oracle_minimum():
    space = ConeSpace(fc.FlatCone(0.5 * math.pi))
    rng = np.random.default_rng(3)
    pairs = space.random_pairs(6, rng)
    est = kappa_obtuse_infinity(space, 0.0, pairs=pairs)
    exact = min(fc.cone_obtuse_inf_exact(space.cone, p, q) for p, q in pairs)
    assert est.value == pytest.approx(exact, abs=1e-3)


def test_kappa_obtuse_plane(plane):
    pairs = [(P(1.0, 0.0), P(2.0, 1.0)), (P(0.5, 0.0), P(3.0, 2.5))]
    est = kappa_obtuse_infinity(plane, 0.0, pairs=pairs, far_radii=(30.0, 100.0), samples=180)
    assert est.value == pytest.approx(HALF_PI, abs=1e-5)


def _tangent(p, w):
    """Unit tangent at p of the half-plane geodesic toward w (complex, or None for the cusp at infinity)."""
    if w is None or abs(w.real - p.real) < 1e-15:
        v = 1j if (w is None or w.imag > p.imag) else -1j
        return v
    c = (abs(p) ** 2 - abs(w) ** 2) / (2 * (p.real - w.real))
    v = 1j * (p - c)
    if (v.conjugate() * (w - p)).real < 0:
        v = -v
    return v / abs(v)


def _cusp_oracle(p, q):
    """Limit over far x of max(angle at p, angle at q) - pi/2 in the ideal triangle.

    The region is convex in the hyperbolic plane, so comparison angles for
    kappa = -1 are true angles; far points can only run into the cusps 0, 1 and
    infinity, and angles are Euclidean in the half-plane model.
    """
    best = -math.inf
    for a, b in ((p, q), (q, p)):
        u = _tangent(a, b)
        for cusp in (0j, 1 + 0j, None):
            v = _tangent(a, cusp)
            best = max(best, abs(np.angle(v / u)))
    return best - HALF_PI


@pytest.mark.parametrize("p,q", [((0.5, 1.5), (0.4, 2.0)), ((0.3, 1.2), (0.7, 0.95)), ((0.5, 3.0), (0.52, 3.1))])
def test_ideal_triangle_pair_matches_cusp_oracle(p, q):
    space = IdealTriangleSpace()
    est = kappa_obtuse_infinity(space, -1.0, pairs=[(HPoint(*p), HPoint(*q))])
    oracle = _cusp_oracle(complex(*p), complex(*q))
    assert est.value == pytest.approx(oracle, abs=1e-3)
    # the three cusp directions are never inside a closed half-plane, so some angle exceeds pi/2
    assert oracle > 0.0


def test_capability_errors(plane, hyp1):
    sphere = SurfaceSpace(rs.make_surface({"type": "spheroid"}))
    with pytest.raises(CapabilityError):
        obtuse_compact(plane, [0.1], ComparisonQuery(None, None), n_pairs=1)
    with pytest.raises(CapabilityError):
        kappa_obtuse_infinity(sphere, 0.0, n_pairs=1)
    with pytest.raises(CapabilityError):
        growth_report(IdealTriangleSpace())


def test_growth_reports(hyp1):
    g = growth_report(hyp1)
    assert g["v_inf"] == pytest.approx(math.pi / math.sqrt(2), abs=1e-4)
    assert g["ideal_boundary_length"] == pytest.approx(2 * math.pi / math.sqrt(2), abs=1e-4)
    assert g["total_curvature"] == pytest.approx(2 * math.pi * (1 - 1 / math.sqrt(2)), abs=1e-4)
    cone = growth_report(ConeSpace(fc.FlatCone(1.2)))
    assert cone["v_inf"] == 0.6
    v = [growth_report(SurfaceSpace(rs.make_surface({"type": "hyperboloid", "a": a})))["v_inf"]
         for a in (0.0, 0.5, 1.0, math.sqrt(3), 3.0)]
    assert all(b < a for a, b in zip(v, v[1:]))


@pytest.mark.slow
def test_sphere_obtuse_compact_scale_invariant():
    vals = []
    for lam in (1.0, 10.0):
        space = SurfaceSpace(rs.make_surface({"type": "spheroid", "scale": lam}))
        est = obtuse_compact(space, [0.03 * lam], ComparisonQuery(None, None), variant="angle", n_pairs=3)
        vals.append(est.value)
    assert vals[0] == pytest.approx(HALF_PI, abs=1e-3)
    assert vals[1] == pytest.approx(vals[0], abs=1e-9)


def test_space_from_spec_and_notes():
    assert isinstance(space_from_spec({"type": "flat_cone", "length": 1.0}), ConeSpace)
    assert isinstance(space_from_spec({"type": "hyperbolic_ideal_triangle"}), IdealTriangleSpace)
    assert "-pi/2" in CONVENTION_NOTES and "inf" in CONVENTION_NOTES
