"""Pure-Python geodesic tracer; fallback for the compiled ``_kernel`` extension.

Geodesics of ``dr^2 + m(r)^2 dtheta^2`` are integrated as the regular system

    r''     = m m' theta'^2
    theta'' = -2 (m'/m) r' theta'

with an auxiliary profile parameter ``u`` (``u' = r' du/dr``) so that profiles
known only parametrically need no inversion.  State layout is
``(r, theta, r', theta', u)``; all lengths are in units of the surface scale.

Profile kinds: 0 plane, 1 hyperboloid ``z = a sqrt(rho^2 + 1)``,
2 spheroid ``(sin u, c cos u)``, 3 tabulated (Python callback only).
"""

import math

import numpy as np

PLANE, HYPERBOLOID, SPHEROID, TABLE = 0, 1, 2, 3

# Dormand-Prince 5(4) tableau and dense-output polynomial
C2, C3, C4, C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
A21 = 0.2
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (-71.0 / 57600.0, 71.0 / 16695.0, -71.0 / 1920.0,
                          17253.0 / 339200.0, -22.0 / 525.0, 1.0 / 40.0)
P = (
    (1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0),
    (0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0),
    (0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0),
    (0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0),
    (0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0),
)

MAX_STEPS = 2_000_000


def profile_eval(kind, pa, table, u):
    """Return (m, m', du/dr) at profile parameter u."""
    if kind == PLANE:
        return u, 1.0, 1.0
    if kind == HYPERBOLOID:
        w = u * u
        speed = math.sqrt(1.0 + pa * pa * w / (w + 1.0))
        return u, 1.0 / speed, 1.0 / speed
    if kind == SPHEROID:
        s, c = math.sin(u), math.cos(u)
        speed = math.sqrt(c * c + pa * pa * s * s)
        return s, c / speed, 1.0 / speed
    return table(u)


def _rhs(kind, pa, table, y):
    r, th, rd, thd, u = y
    m, mp, dudr = profile_eval(kind, pa, table, u)
    return (rd, thd, m * mp * thd * thd, -2.0 * (mp / m) * rd * thd, rd * dudr)


def _dense(y0, ks, h, x):
    q = [x, x * x, x * x * x, x * x * x * x]
    out = list(y0)
    for i in range(7):
        coef = h * (P[i][0] * q[0] + P[i][1] * q[1] + P[i][2] * q[2] + P[i][3] * q[3])
        if coef != 0.0:
            k = ks[i]
            for j in range(5):
                out[j] += coef * k[j]
    return out


def _toward_vertex(kind, rmax, y):
    """Local distance to the vertex the geodesic is heading into, or -1."""
    r, rd, u = y[0], y[2], y[4]
    if kind == SPHEROID and u > 0.5 * math.pi:
        return rmax - r if rd > 0.0 else -1.0
    return r if rd < 0.0 else -1.0


def _chord(y, m):
    """Cross the small chart ball along a straight chord; returns (new state, chord length)."""
    r, th, rd, thd, u = y
    vt = m * thd
    speed = math.sqrt(rd * rd + vt * vt)
    cosb = min(abs(vt) / speed, 1.0)
    sweep = 2.0 * math.acos(cosb)
    sign = 1.0 if thd >= 0.0 else -1.0
    length = 2.0 * m * abs(rd) / speed
    return [r, th + sign * sweep, -rd, thd, u], length


def _chord_partial(y, m, frac):
    """State a fraction ``frac`` of the way along the chord started at ``y``."""
    r, th, rd, thd, u = y
    vt = m * thd
    speed = math.sqrt(rd * rd + vt * vt)
    length = 2.0 * m * abs(rd) / speed
    tau = frac * length
    # chart frame: entry point on +x axis, unit velocity (vr, vt)/speed
    vx, vy = -abs(rd) / speed, vt / speed
    px, py = m + tau * vx, tau * vy
    rho = math.hypot(px, py)
    ang = math.atan2(py, px)
    rad = (px * vx + py * vy) / max(rho, 1e-300)
    newr = r - (m - rho) if rd < 0 else r + (m - rho)
    newrd = rad if rd < 0 else -rad
    newthd = thd * (m * m) / max(rho * rho, 1e-300)
    return [newr, th + ang, newrd, newthd, u]


def trace(kind, pa, rmax, y0, length, s_out, radii, rtol=1e-10, atol=1e-10,
          r_chart=1e-3, record=False, table=None, max_events=1_000_000):
    """Integrate a unit-speed geodesic for arclength ``length``.

    Returns ``(out, events, final, steps)``: states at the sorted arclengths
    ``s_out``; crossings of the circles ``r = radii[j]`` as rows
    ``(j, s, r, theta, r', theta')``; the final row ``(s, r, theta, r', theta', u)``;
    and, if ``record``, every accepted step in the same layout (else None).
    """
    y = [float(v) for v in y0]
    s_out = np.ascontiguousarray(s_out, dtype=float)
    radii = np.ascontiguousarray(radii, dtype=float)
    nout = s_out.shape[0]
    out = np.empty((nout, 5))
    events = []
    steps = [[0.0] + y[:]] if record else None
    s = 0.0
    iout = 0
    while iout < nout and s_out[iout] <= 0.0:
        out[iout] = y
        iout += 1
    if length <= 0.0:
        while iout < nout:
            out[iout] = y
            iout += 1
        return out, np.empty((0, 6)), np.array([s] + y), (np.array(steps) if record else None)

    k1 = _rhs(kind, pa, table, y)
    h = min(0.01, length)
    nsteps = 0
    while s < length:
        nsteps += 1
        if nsteps > MAX_STEPS:
            raise RuntimeError("geodesic tracer exceeded the step budget")
        # vertex chart
        dv = _toward_vertex(kind, rmax, y)
        if dv >= 0.0:
            m = profile_eval(kind, pa, table, y[4])[0]
            if m < r_chart:
                ynew, clen = _chord(y, m)
                if s + clen >= length:
                    frac = (length - s) / clen
                    while iout < nout:
                        out[iout] = _chord_partial(y, m, (s_out[iout] - s) / clen)
                        iout += 1
                    y = _chord_partial(y, m, frac)
                    s = length
                    if record:
                        steps.append([s] + y)
                    break
                while iout < nout and s_out[iout] <= s + clen:
                    out[iout] = _chord_partial(y, m, (s_out[iout] - s) / clen)
                    iout += 1
                s += clen
                y = ynew
                k1 = _rhs(kind, pa, table, y)
                if record:
                    steps.append([s] + y)
                continue
            if dv > r_chart and abs(y[2]) > 0.0:
                h = min(h, max((dv - 0.5 * r_chart) / abs(y[2]), 1e-12))
        hh = min(h, length - s)
        if iout < nout and s_out[iout] < s + hh:
            hh = max(s_out[iout] - s, 0.0)
            if hh == 0.0:
                out[iout] = y
                iout += 1
                continue
        # one Dormand-Prince attempt
        k2 = _rhs(kind, pa, table, [y[j] + hh * A21 * k1[j] for j in range(5)])
        k3 = _rhs(kind, pa, table, [y[j] + hh * (A31 * k1[j] + A32 * k2[j]) for j in range(5)])
        k4 = _rhs(kind, pa, table, [y[j] + hh * (A41 * k1[j] + A42 * k2[j] + A43 * k3[j]) for j in range(5)])
        k5 = _rhs(kind, pa, table, [y[j] + hh * (A51 * k1[j] + A52 * k2[j] + A53 * k3[j] + A54 * k4[j])
                                    for j in range(5)])
        k6 = _rhs(kind, pa, table, [y[j] + hh * (A61 * k1[j] + A62 * k2[j] + A63 * k3[j] + A64 * k4[j]
                                                 + A65 * k5[j]) for j in range(5)])
        yn = [y[j] + hh * (B1 * k1[j] + B3 * k3[j] + B4 * k4[j] + B5 * k5[j] + B6 * k6[j]) for j in range(5)]
        k7 = _rhs(kind, pa, table, yn)
        err = 0.0
        for j in range(5):
            e = hh * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j])
            sc = atol + rtol * max(abs(y[j]), abs(yn[j]))
            err = max(err, abs(e / sc))
        if not math.isfinite(sum(yn)):
            err = math.inf
        bad_u = kind != PLANE and (yn[4] < 0.0 or (kind == SPHEROID and yn[4] > math.pi))
        if err > 1.0 or not math.isfinite(err) or bad_u:
            fac = 0.2 if (bad_u or not math.isfinite(err)) else max(0.2, 0.9 * err ** -0.2)
            h = hh * fac
            if h < 1e-14:
                raise RuntimeError("geodesic tracer step size underflow")
            continue
        # accepted: events
        ks = (k1, k2, k3, k4, k5, k6, k7)
        for j in range(radii.shape[0]):
            rad = radii[j]
            f0, f1 = y[0] - rad, yn[0] - rad
            if f0 == 0.0 or f0 * f1 >= 0.0:
                if f1 == 0.0 and len(events) < max_events:
                    events.append([j, s + hh] + yn[:4])
                continue
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                fm = _dense(y, ks, hh, mid)[0] - rad
                if fm * f0 > 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-15:
                    break
            x = 0.5 * (lo + hi)
            ye = _dense(y, ks, hh, x)
            if len(events) < max_events:
                events.append([j, s + x * hh, rad] + ye[1:4])
        s += hh
        y = yn
        k1 = k7
        if record:
            steps.append([s] + y)
        while iout < nout and s_out[iout] <= s:
            out[iout] = y
            iout += 1
        fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
        h = hh * fac if hh == h or fac < 1.0 else max(h, hh * fac)
    while iout < nout:
        out[iout] = y
        iout += 1
    ev = np.array(events, dtype=float).reshape(-1, 6)
    if ev.shape[0] > 1:
        ev = ev[np.argsort(ev[:, 1], kind="stable")]
    return out, ev, np.array([s] + y), (np.array(steps) if record else None)
