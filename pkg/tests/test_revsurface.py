import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from obtuselab import kernel, revsurface as rs
from obtuselab.errors import DomainError, SpecError

PLANE = rs.make_surface({"type": "plane"})
SPHERE = rs.make_surface({"type": "spheroid", "profile": "sin"})
HYP1 = rs.make_surface({"type": "hyperboloid", "a": 1.0})
P = rs.SurfacePoint


def great_circle(p, q):
    """Unit-sphere distance between (colatitude, longitude) points."""
    c = math.cos(p.r) * math.cos(q.r) + math.sin(p.r) * math.sin(q.r) * math.cos(p.theta - q.theta)
    return math.acos(max(-1.0, min(1.0, c)))


# -- profiles ------------------------------------------------------------------

def test_profile_basics():
    r = np.linspace(0.1, 3.0, 7)
    assert np.allclose(PLANE.m(r), r, atol=0, rtol=1e-14)
    assert np.allclose(PLANE.curvature(r), 0.0)
    assert np.allclose(SPHERE.m(r), np.sin(r), atol=1e-12)
    assert np.allclose(SPHERE.curvature(r), 1.0, atol=1e-9)
    assert SPHERE.r_max == pytest.approx(math.pi, abs=1e-14)


def test_hyperboloid_profile_limits():
    assert float(HYP1.m_prime(1e4)) == pytest.approx(1 / math.sqrt(2), abs=1e-7)
    # K(0) against Richardson-extrapolated second differences of m
    def fd(h):
        m0, m1, m2 = (float(HYP1.m(x)) for x in (h, 2 * h, 3 * h))
        return -(m2 - 2 * m1 + m0) / (h * h) / m1
    k0 = (4 * fd(5e-4) - fd(1e-3)) / 3
    assert float(HYP1.curvature(0.0)) == pytest.approx(1.0, abs=1e-12)
    assert float(HYP1.curvature(2e-3)) == pytest.approx(k0, abs=1e-3)


def test_profile_table_is_plane_like():
    t = rs.make_surface({"type": "profile_table", "r": [0, 1], "m": [0, 1]})
    assert float(t.m(0.5)) == pytest.approx(0.5)
    assert float(t.m(4.0)) == pytest.approx(4.0)
    d = rs.distance(t, P(1.0, 0.0), P(1.0, 1.0))
    assert d == pytest.approx(2 * math.sin(0.5), abs=1e-7)


@pytest.mark.parametrize("spec,field", [
    ({"type": "hyperboloid", "a": -1}, "a"),
    ({"type": "spheroid", "c": 0}, "c"),
    ({"type": "profile_table", "r": [0, 1, 0.5], "m": [0, 1, 2]}, "r"),
    ({"type": "profile_table", "r": [0.1, 1], "m": [0, 1]}, "m"),
    ({"type": "torus"}, "type"),
    ({"type": "plane", "scale": -2}, "scale"),
])
def test_invalid_specs(spec, field):
    with pytest.raises(SpecError) as exc:
        rs.make_surface(spec)
    assert exc.value.field == field


# -- integration -----------------------------------------------------------------

def test_meridian_through_vertex():
    path = rs.integrate_geodesic(PLANE, PLANE.state(P(1.0, 0.0), math.pi), 2.0)
    assert path.end.r == pytest.approx(1.0, abs=1e-9)
    assert rs._wrap(path.end.theta - math.pi) == pytest.approx(0.0, abs=1e-9)


def test_equator_is_closed_geodesic():
    path = rs.integrate_geodesic(SPHERE, SPHERE.state(P(math.pi / 2, 0.0), math.pi / 2), 2 * math.pi)
    assert path.end.r == pytest.approx(math.pi / 2, abs=1e-9)
    assert rs._wrap(path.end.theta) == pytest.approx(0.0, abs=1e-9)
    assert abs(path.winding) == 1


@settings(max_examples=25, deadline=None)
@given(r=st.floats(0.05, 5.0), t=st.floats(-math.pi, math.pi), a=st.sampled_from([0.5, 1.0, 3.0]))
def test_clairaut_and_speed_conserved(r, t, a):
    s = rs.make_surface({"type": "hyperboloid", "a": a})
    path = rs.integrate_geodesic(s, s.state(P(r, 0.0), t), 100.0)
    nu = rs.clairaut(s, path)
    assert np.max(np.abs(nu - nu[0])) <= 1e-8
    speed2 = path.r_dot ** 2 + s.m(path.r) ** 2 * path.theta_dot ** 2
    assert np.max(np.abs(speed2 - 1.0)) <= 1e-8


def test_non_unit_speed_rejected():
    st_ = rs.GeodesicState(P(1.0, 0.0), 2.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        rs.integrate_geodesic(PLANE, st_, 1.0)


def test_backends_agree():
    y0 = [2.0, 0.0, math.cos(0.7), math.sin(0.7) / float(HYP1.m(2.0)), float(HYP1.u_hat(2.0))]
    a = kernel.trace(HYP1.kind, HYP1.pa, HYP1.r_max_hat, y0, 30.0, (), (5.0,), rtol=1e-10, atol=1e-10)
    b = kernel.trace_python(HYP1.kind, HYP1.pa, HYP1.r_max_hat, y0, 30.0, (), (5.0,), rtol=1e-10, atol=1e-10)
    assert np.allclose(a[2][:5], b[2][:5], rtol=0, atol=1e-11)
    assert np.allclose(a[1], b[1], rtol=0, atol=1e-11)


def test_python_backend_forced_by_env():
    code = "from obtuselab import kernel; print(kernel.BACKEND)"
    env = dict(os.environ, OBTUSELAB_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


# -- boundary value problem --------------------------------------------------------

def test_plane_connect_through_vertex():
    c = rs.connect(PLANE, P(1.0, 0.0), P(1.0, math.pi))
    assert c.distance == pytest.approx(2.0, abs=1e-9)
    assert len(c.directions) == 1 and abs(rs._wrap(c.directions[0] - math.pi)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(r1=st.floats(0.2, 4), r2=st.floats(0.2, 4), th=st.floats(0, 2 * math.pi))
def test_plane_distance_is_euclidean(r1, r2, th):
    d = rs.distance(PLANE, P(r1, 0.0), P(r2, th))
    assert d == pytest.approx(abs(r1 - r2 * complex(math.cos(th), math.sin(th))), abs=1e-7)


@settings(max_examples=20, deadline=None)
@given(r1=st.floats(0.2, 2.9), r2=st.floats(0.2, 2.9), th=st.floats(0, 2 * math.pi))
def test_sphere_distance_is_great_circle(r1, r2, th):
    p, q = P(r1, 0.0), P(r2, th)
    if great_circle(p, q) < 1e-6:
        return
    assert rs.distance(SPHERE, p, q) == pytest.approx(great_circle(p, q), abs=1e-7)


def test_sphere_antipode_degenerate():
    c = rs.connect(SPHERE, P(1.0, 0.0), P(math.pi - 1.0, math.pi))
    assert c.distance == pytest.approx(math.pi, abs=1e-7)
    assert c.degenerate and len(c.directions) >= 2


def test_sphere_tangency_target():
    # the target sits where every great circle from the equator point touches its latitude
    c = rs.connect(SPHERE, P(math.pi / 2, 0.0), P(0.9425, math.pi / 2))
    assert c.distance == pytest.approx(math.pi / 2, abs=1e-9)


def test_hyperboloid_opposite_points_brute_force():
    c = rs.connect(HYP1, P(2.0, 0.0), P(2.0, math.pi))
    m0, u0 = float(HYP1.m(2.0)), float(HYP1.u_hat(2.0))
    best = math.inf
    for t in np.linspace(-math.pi, math.pi, 10_000, endpoint=False):
        _, ev, _, _ = HYP1._trace([2.0, 0.0, math.cos(t), math.sin(t) / m0, u0], 8.0, (), [2.0])
        for row in ev:
            if abs(rs._wrap(row[3] - math.pi)) < 1e-3:
                best = min(best, row[1])
    assert c.distance == pytest.approx(best, abs=1e-5)
    # the minimizer runs through the vertex and is unique
    assert len(c.directions) == 1 and abs(rs._wrap(c.directions[0] - math.pi)) < 1e-6


def test_mirror_symmetry_of_directions():
    c1 = rs.connect(HYP1, P(2.0, 0.0), P(1.5, 2.0))
    c2 = rs.connect(HYP1, P(2.0, 0.0), P(1.5, -2.0))
    assert c1.distance == pytest.approx(c2.distance, abs=1e-9)
    assert sorted(c1.directions) == pytest.approx(sorted(-x for x in c2.directions), abs=1e-6)


def test_oblate_equator_arc():
    s = rs.make_surface({"type": "spheroid", "c": 0.8})
    r_eq = 0.5 * s.r_max
    assert rs.distance(s, P(r_eq, 0.0), P(r_eq, 0.5)) == pytest.approx(0.5, abs=1e-7)


def test_tangent_angle_examples():
    at = P(2.0, 0.0)
    v = (0.3, 0.2)
    assert rs.tangent_angle(HYP1, at, v, v) == pytest.approx(0.0, abs=1e-12)
    assert rs.tangent_angle(HYP1, at, (1.0, 0.0), (0.0, 1.0)) == pytest.approx(math.pi / 2, abs=1e-15)


# -- areas and asymptotics ------------------------------------------------------------

def test_ball_areas():
    assert rs.ball_area(PLANE, 3.0) == pytest.approx(math.pi * 9.0, rel=1e-14)
    assert rs.ball_area(SPHERE, math.pi) == pytest.approx(4 * math.pi, rel=1e-12)
    assert rs.ball_area(SPHERE, 1.0) == pytest.approx(2 * math.pi * (1 - math.cos(1.0)), rel=1e-12)


def test_hyperboloid_ball_area_midpoint_oracle():
    n = 1_000_000
    r = (np.arange(n) + 0.5) * (50.0 / n)
    oracle = 2 * math.pi * float(np.sum(HYP1.m(r))) * (50.0 / n)
    assert rs.ball_area(HYP1, 50.0) == pytest.approx(oracle, rel=1e-6)


def test_plane_asymptotics():
    ap = rs.asymptotic_profile(PLANE)
    assert (ap["m_prime_limit"], ap["total_curvature"]) == pytest.approx((1.0, 0.0), abs=1e-12)
    assert (ap["ideal_boundary_length"], ap["v_inf"]) == pytest.approx((2 * math.pi, math.pi), abs=1e-12)


@pytest.mark.parametrize("a", [0.0, 0.5, 1.0, math.sqrt(3), 3.0])
def test_hyperboloid_asymptotics(a):
    ap = rs.asymptotic_profile(rs.make_surface({"type": "hyperboloid", "a": a}))
    c = 1 / math.sqrt(1 + a * a)
    assert ap["v_inf"] == pytest.approx(math.pi * c, abs=1e-6)
    assert ap["total_curvature"] == pytest.approx(2 * math.pi * (1 - c), abs=1e-6)
    assert ap["total_curvature_quadrature"] == pytest.approx(2 * math.pi * (1 - c), abs=1e-6)


def test_scaling():
    s2 = rs.make_surface({"type": "hyperboloid", "a": 1.0, "scale": 2.0})
    assert rs.distance(s2, P(4.0, 0.0), P(3.0, 2.0)) == pytest.approx(
        2 * rs.distance(HYP1, P(2.0, 0.0), P(1.5, 2.0)), abs=1e-7)
    assert rs.ball_area(s2, 10.0) == pytest.approx(4 * rs.ball_area(HYP1, 5.0), rel=1e-10)


# -- rays -----------------------------------------------------------------------------

def test_rays_examples():
    assert rs.is_ray(PLANE, P(1.0, 0.0), 0.7, horizon=20.0)
    assert not rs.is_ray(SPHERE, P(1.0, 0.0), 0.3, horizon=math.pi + 0.1)
    assert rs.is_ray(HYP1, P(2.0, 0.0), math.pi / 2, horizon=50.0)


def test_ray_measure_plane():
    m = rs.ray_measure(PLANE, P(1.0, 0.0), horizon=20.0, n_scan=16)
    assert m["lower"] == pytest.approx(2 * math.pi, abs=1e-9)


@pytest.mark.slow
def test_ray_measure_total_curvature_pi():
    s = rs.make_surface({"type": "hyperboloid", "a": math.sqrt(3)})
    m = rs.ray_measure(s, P(1.5, 0.0), horizon=50.0, n_scan=32)
    assert m["lower"] >= math.pi - 0.05


# -- compact extents ------------------------------------------------------------------

def test_sphere_extents_and_scaling():
    e1 = rs.compact_extents(SPHERE)
    assert e1["diameter"] == pytest.approx(math.pi, abs=1e-6)
    assert e1["radius"] == pytest.approx(math.pi, abs=1e-6)
    assert e1["normalized_volume"] == pytest.approx(4 / math.pi, abs=1e-6)
    e2 = rs.compact_extents(rs.make_surface({"type": "spheroid", "scale": 2.0}))
    assert e2["normalized_volume"] == pytest.approx(e1["normalized_volume"], abs=1e-9)


@pytest.mark.slow
def test_spheroid_family_normalized_volume():
    vals = {}
    for c in (0.6, 1.0, 1.5, 2.5):
        s = rs.make_surface({"type": "spheroid", "c": c})
        e = rs.compact_extents(s)
        # the meridian through the poles bounds the diameter from above
        assert e["diameter"] <= s.r_max + 1e-6 or e["diameter"] <= math.pi + 1e-6
        vals[c] = e["normalized_volume"]
    # elongating toward a segment collapses the surface: normalized volume falls
    assert vals[1.0] > vals[1.5] > vals[2.5]
    # flattening toward a doubled disk does not collapse: it rises toward pi/2
    assert vals[0.6] > vals[1.0]
