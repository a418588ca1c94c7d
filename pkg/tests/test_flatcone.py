import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from obtuselab import flatcone as fc
from obtuselab.errors import DomainError, SpecError
from obtuselab.model_trig import comparison_angle


def test_distance_examples():
    assert fc.cone_distance(fc.FlatCone(2 * math.pi), fc.ConePoint(1, 0), fc.ConePoint(1, math.pi)) == 2.0
    assert fc.cone_distance(fc.FlatCone(math.pi), fc.ConePoint(1, 0),
                            fc.ConePoint(1, math.pi / 2)) == pytest.approx(math.sqrt(2), abs=1e-15)
    ell = 1.5 * math.pi
    d = fc.cone_distance(fc.FlatCone(ell), fc.ConePoint(1, 0), fc.ConePoint(1, 0.75 * math.pi))
    assert d == pytest.approx(math.sqrt(2 - 2 * math.cos(0.75 * math.pi)), abs=1e-15)


def test_invalid_cones():
    with pytest.raises(SpecError):
        fc.FlatCone(7.0)
    with pytest.raises(SpecError):
        fc.FlatCone(0.0)
    with pytest.raises(DomainError):
        fc.ConePoint(-1.0, 0.0)


def test_connect_through_apex_and_ties():
    plane = fc.FlatCone(2 * math.pi)
    c = fc.cone_connect(plane, fc.ConePoint(1, 0), fc.ConePoint(2, math.pi))
    assert c.through_apex and c.distance == 3.0 and c.directions_p == [math.pi]
    c = fc.cone_connect(plane, fc.ConePoint(1, 0), fc.ConePoint(2, 0))
    assert not c.through_apex and c.directions_p == [0.0]
    # gap exactly pi on a cone of length 2 pi - 0.5 is < pi the other way; on 2 pi both ways tie
    c = fc.cone_connect(fc.FlatCone(1.5 * math.pi), fc.ConePoint(1, 0), fc.ConePoint(1, 0.75 * math.pi))
    assert len(c.directions_p) == 2
    assert c.directions_p[0] == pytest.approx(-c.directions_p[1], abs=1e-15)


def unrolled_brute_distance(ell, p, q):
    """Minimum over unrolled copies within a half-turn, else through the apex."""
    best = p.rho + q.rho
    copies = int(abs(q.phi - p.phi) / ell) + 8
    for k in range(-copies, copies + 1):
        psi = q.phi - p.phi + k * ell
        if abs(psi) < math.pi:
            best = min(best, abs(complex(p.rho, 0.0) - q.rho * complex(math.cos(psi), math.sin(psi))))
    return best


@settings(max_examples=300, deadline=None)
@given(ell=st.floats(0.1, 2 * math.pi), r1=st.floats(0, 5), r2=st.floats(0, 5),
       a=st.floats(0, 20), b=st.floats(0, 20))
def test_distance_matches_unrolling(ell, r1, r2, a, b):
    cone = fc.FlatCone(ell)
    p, q = fc.ConePoint(r1, a), fc.ConePoint(r2, b)
    assert fc.cone_distance(cone, p, q) == pytest.approx(unrolled_brute_distance(ell, p, q), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(ell=st.floats(0.1, 2 * math.pi), pts=st.lists(st.tuples(st.floats(0, 5), st.floats(0, 7)),
                                                    min_size=3, max_size=3))
def test_metric_axioms(ell, pts):
    cone = fc.FlatCone(ell)
    p, q, r = (fc.ConePoint(*x) for x in pts)
    d = lambda u, v: fc.cone_distance(cone, u, v)
    assert d(p, q) == pytest.approx(d(q, p), abs=1e-12)
    assert d(p, r) <= d(p, q) + d(q, r) + 1e-10
    assert d(p, p) == pytest.approx(0.0, abs=1e-12)


def brute_limsup(cone, p, q, variant, R=1e6, n=200_000):
    ell = cone.link_length
    phis = np.linspace(0.0, ell, n, endpoint=False)
    best = -math.inf
    dpq = fc.cone_distance(cone, p, q)
    cp = fc.cone_connect(cone, p, q)
    cq = fc.cone_connect(cone, q, p)
    for phi in phis:
        x = fc.ConePoint(R, float(phi))
        if variant == "comparison":
            dp, dq = fc.cone_distance(cone, x, p), fc.cone_distance(cone, x, q)
            v = max(comparison_angle(0.0, (dp, dpq, dq)), comparison_angle(0.0, (dq, dpq, dp)))
        else:
            xp = fc.cone_connect(cone, p, x).directions_p
            xq = fc.cone_connect(cone, q, x).directions_p
            v = max(max(min(fc.cone_angle(cone, p, u, w) for u in cp.directions_p) for w in xp),
                    max(min(fc.cone_angle(cone, q, u, w) for u in cq.directions_p) for w in xq))
        best = max(best, v)
    return best - 0.5 * math.pi


@pytest.mark.slow
@pytest.mark.parametrize("variant", ["comparison", "angle"])
def test_exact_oracle_against_brute_force(variant):
    cone = fc.FlatCone(0.5 * math.pi)
    p, q = fc.ConePoint(1.3, 0.2), fc.ConePoint(0.7, 1.1)
    exact = fc.cone_obtuse_inf_exact(cone, p, q, variant=variant)
    assert exact == pytest.approx(brute_limsup(cone, p, q, variant, n=50_000), abs=1e-4)


def test_exact_oracle_trivial_cases():
    plane = fc.FlatCone(2 * math.pi)
    p, q = fc.ConePoint(1.0, 0.3), fc.ConePoint(2.0, 2.0)
    for v in ("comparison", "angle"):
        assert fc.cone_obtuse_inf_exact(plane, p, q, variant=v) == pytest.approx(math.pi / 2, abs=1e-9)
    cone = fc.FlatCone(0.7)
    p, q = fc.ConePoint(1.0, 0.3), fc.ConePoint(2.5, 0.3)
    for v in ("comparison", "angle"):
        assert fc.cone_obtuse_inf_exact(cone, p, q, variant=v) == pytest.approx(math.pi / 2, abs=1e-9)
    with pytest.raises(DomainError):
        fc.cone_obtuse_inf_exact(cone, p, q, kappa=-1.0)


def test_growth():
    cone = fc.FlatCone(1.0)
    assert fc.cone_ball_area(cone, 3.0) == 4.5
    assert fc.cone_v_inf(cone) == 0.5
