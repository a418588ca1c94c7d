# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled geodesic tracer.  Same contract as ``_kernel_py.trace``.

Only the analytic profile kinds (plane, hyperboloid, spheroid) are compiled;
tabulated profiles always go through the Python fallback.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, acos, atan2, hypot, fabs, pow, isfinite, INFINITY

cnp.import_array()

cdef enum:
    NS = 5
cdef int PLANE = 0
cdef int HYPERBOLOID = 1
cdef int SPHEROID = 2
cdef double PI = 3.141592653589793

cdef double A21 = 0.2
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = -71.0 / 57600.0, E3 = 71.0 / 16695.0, E4 = -71.0 / 1920.0
cdef double E5 = 17253.0 / 339200.0, E6 = -22.0 / 525.0, E7 = 1.0 / 40.0

cdef double P[7][4]
P[0][:] = [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0]
P[1][:] = [0.0, 0.0, 0.0, 0.0]
P[2][:] = [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0]
P[3][:] = [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0]
P[4][:] = [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0]
P[5][:] = [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0]
P[6][:] = [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0]

cdef long MAX_STEPS = 2000000


cdef inline void profile_eval(int kind, double pa, double u, double* m, double* mp, double* dudr) noexcept nogil:
    cdef double w, speed, s, c
    if kind == PLANE:
        m[0] = u
        mp[0] = 1.0
        dudr[0] = 1.0
    elif kind == HYPERBOLOID:
        w = u * u
        speed = sqrt(1.0 + pa * pa * w / (w + 1.0))
        m[0] = u
        mp[0] = 1.0 / speed
        dudr[0] = 1.0 / speed
    else:
        s = sin(u)
        c = cos(u)
        speed = sqrt(c * c + pa * pa * s * s)
        m[0] = s
        mp[0] = c / speed
        dudr[0] = 1.0 / speed


cdef inline void rhs(int kind, double pa, double* y, double* f) noexcept nogil:
    cdef double m, mp, dudr
    profile_eval(kind, pa, y[4], &m, &mp, &dudr)
    f[0] = y[2]
    f[1] = y[3]
    f[2] = m * mp * y[3] * y[3]
    f[3] = -2.0 * (mp / m) * y[2] * y[3]
    f[4] = y[2] * dudr


cdef inline void dense(double* y0, double[7][NS] ks, double h, double x, double* out) noexcept nogil:
    cdef double q0 = x, q1 = x * x, q2 = x * x * x, q3 = x * x * x * x
    cdef double coef
    cdef int i, j
    for j in range(NS):
        out[j] = y0[j]
    for i in range(7):
        coef = h * (P[i][0] * q0 + P[i][1] * q1 + P[i][2] * q2 + P[i][3] * q3)
        if coef != 0.0:
            for j in range(NS):
                out[j] += coef * ks[i][j]


cdef inline double toward_vertex(int kind, double rmax, double* y) noexcept nogil:
    if kind == SPHEROID and y[4] > 0.5 * PI:
        return rmax - y[0] if y[2] > 0.0 else -1.0
    return y[0] if y[2] < 0.0 else -1.0


cdef void chord_partial(double* y, double m, double frac, double* out) noexcept nogil:
    cdef double vt = m * y[3]
    cdef double speed = sqrt(y[2] * y[2] + vt * vt)
    cdef double length = 2.0 * m * fabs(y[2]) / speed
    cdef double tau = frac * length
    cdef double vx = -fabs(y[2]) / speed, vy = vt / speed
    cdef double px = m + tau * vx, py = tau * vy
    cdef double rho = hypot(px, py)
    cdef double ang = atan2(py, px)
    if rho < 1e-300:
        rho = 1e-300
    cdef double rad = (px * vx + py * vy) / rho
    if y[2] < 0:
        out[0] = y[0] - (m - rho)
        out[2] = rad
    else:
        out[0] = y[0] + (m - rho)
        out[2] = -rad
    out[1] = y[1] + ang
    out[3] = y[3] * (m * m) / (rho * rho)
    out[4] = y[4]


def trace(int kind, double pa, double rmax, y0, double length, s_out, radii,
          double rtol=1e-10, double atol=1e-10, double r_chart=1e-3, bint record=False,
          table=None, long max_events=1000000):
    if kind != PLANE and kind != HYPERBOLOID and kind != SPHEROID:
        raise ValueError("compiled tracer supports analytic profiles only")
    cdef cnp.ndarray[cnp.double_t, ndim=1] so = np.ascontiguousarray(s_out, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] rr = np.ascontiguousarray(radii, dtype=np.float64)
    cdef Py_ssize_t nout = so.shape[0], nrad = rr.shape[0]
    cdef cnp.ndarray[cnp.double_t, ndim=2] out = np.empty((nout, NS))
    cdef double y[NS]
    cdef double yn[NS]
    cdef double tmp[NS]
    cdef double ye[NS]
    cdef double ks[7][NS]
    cdef int i, j, it
    cdef Py_ssize_t iout = 0, jr
    cdef double s = 0.0, h, hh, err, e, sc, fac, dv, m, mp, dudr
    cdef double vt, speed, clen, sweep, sgn, f0, f1, lo, hi, mid, fm, x, rad
    cdef long nsteps = 0
    cdef bint bad
    events = []
    steps = []
    for j in range(NS):
        y[j] = float(y0[j])
    if record:
        steps.append((0.0, y[0], y[1], y[2], y[3], y[4]))
    while iout < nout and so[iout] <= 0.0:
        for j in range(NS):
            out[iout, j] = y[j]
        iout += 1
    if length <= 0.0:
        while iout < nout:
            for j in range(NS):
                out[iout, j] = y[j]
            iout += 1
        return (out, np.empty((0, 6)), np.array([s, y[0], y[1], y[2], y[3], y[4]]),
                np.array(steps) if record else None)

    rhs(kind, pa, y, ks[0])
    h = 0.01 if length > 0.01 else length
    while s < length:
        nsteps += 1
        if nsteps > MAX_STEPS:
            raise RuntimeError("geodesic tracer exceeded the step budget")
        dv = toward_vertex(kind, rmax, y)
        if dv >= 0.0:
            profile_eval(kind, pa, y[4], &m, &mp, &dudr)
            if m < r_chart:
                vt = m * y[3]
                speed = sqrt(y[2] * y[2] + vt * vt)
                clen = 2.0 * m * fabs(y[2]) / speed
                if s + clen >= length:
                    while iout < nout:
                        chord_partial(y, m, (so[iout] - s) / clen, tmp)
                        for j in range(NS):
                            out[iout, j] = tmp[j]
                        iout += 1
                    chord_partial(y, m, (length - s) / clen, tmp)
                    for j in range(NS):
                        y[j] = tmp[j]
                    s = length
                    if record:
                        steps.append((s, y[0], y[1], y[2], y[3], y[4]))
                    break
                while iout < nout and so[iout] <= s + clen:
                    chord_partial(y, m, (so[iout] - s) / clen, tmp)
                    for j in range(NS):
                        out[iout, j] = tmp[j]
                    iout += 1
                sweep = 2.0 * acos(min(fabs(vt) / speed, 1.0))
                sgn = 1.0 if y[3] >= 0.0 else -1.0
                s += clen
                y[1] = y[1] + sgn * sweep
                y[2] = -y[2]
                rhs(kind, pa, y, ks[0])
                if record:
                    steps.append((s, y[0], y[1], y[2], y[3], y[4]))
                continue
            if dv > r_chart and fabs(y[2]) > 0.0:
                h = min(h, max((dv - 0.5 * r_chart) / fabs(y[2]), 1e-12))
        hh = min(h, length - s)
        if iout < nout and so[iout] < s + hh:
            hh = max(so[iout] - s, 0.0)
            if hh == 0.0:
                for j in range(NS):
                    out[iout, j] = y[j]
                iout += 1
                continue
        for j in range(NS):
            tmp[j] = y[j] + hh * A21 * ks[0][j]
        rhs(kind, pa, tmp, ks[1])
        for j in range(NS):
            tmp[j] = y[j] + hh * (A31 * ks[0][j] + A32 * ks[1][j])
        rhs(kind, pa, tmp, ks[2])
        for j in range(NS):
            tmp[j] = y[j] + hh * (A41 * ks[0][j] + A42 * ks[1][j] + A43 * ks[2][j])
        rhs(kind, pa, tmp, ks[3])
        for j in range(NS):
            tmp[j] = y[j] + hh * (A51 * ks[0][j] + A52 * ks[1][j] + A53 * ks[2][j] + A54 * ks[3][j])
        rhs(kind, pa, tmp, ks[4])
        for j in range(NS):
            tmp[j] = y[j] + hh * (A61 * ks[0][j] + A62 * ks[1][j] + A63 * ks[2][j] + A64 * ks[3][j]
                                  + A65 * ks[4][j])
        rhs(kind, pa, tmp, ks[5])
        for j in range(NS):
            yn[j] = y[j] + hh * (B1 * ks[0][j] + B3 * ks[2][j] + B4 * ks[3][j] + B5 * ks[4][j] + B6 * ks[5][j])
        rhs(kind, pa, yn, ks[6])
        err = 0.0
        for j in range(NS):
            e = hh * (E1 * ks[0][j] + E3 * ks[2][j] + E4 * ks[3][j] + E5 * ks[4][j] + E6 * ks[5][j]
                      + E7 * ks[6][j])
            sc = atol + rtol * max(fabs(y[j]), fabs(yn[j]))
            err = max(err, fabs(e / sc))
        if not isfinite(yn[0] + yn[1] + yn[2] + yn[3] + yn[4]):
            err = INFINITY
        bad = kind != PLANE and (yn[4] < 0.0 or (kind == SPHEROID and yn[4] > PI))
        if err > 1.0 or not isfinite(err) or bad:
            fac = 0.2 if (bad or not isfinite(err)) else max(0.2, 0.9 * pow(err, -0.2))
            h = hh * fac
            if h < 1e-14:
                raise RuntimeError("geodesic tracer step size underflow")
            continue
        for jr in range(nrad):
            rad = rr[jr]
            f0 = y[0] - rad
            f1 = yn[0] - rad
            if f0 == 0.0 or f0 * f1 >= 0.0:
                if f1 == 0.0 and len(events) < max_events:
                    events.append((jr, s + hh, yn[0], yn[1], yn[2], yn[3]))
                continue
            lo = 0.0
            hi = 1.0
            for it in range(60):
                mid = 0.5 * (lo + hi)
                dense(y, ks, hh, mid, ye)
                fm = ye[0] - rad
                if fm * f0 > 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-15:
                    break
            x = 0.5 * (lo + hi)
            dense(y, ks, hh, x, ye)
            if len(events) < max_events:
                events.append((jr, s + x * hh, rad, ye[1], ye[2], ye[3]))
        s += hh
        for j in range(NS):
            y[j] = yn[j]
            ks[0][j] = ks[6][j]
        if record:
            steps.append((s, y[0], y[1], y[2], y[3], y[4]))
        while iout < nout and so[iout] <= s:
            for j in range(NS):
                out[iout, j] = y[j]
            iout += 1
        fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * pow(err, -0.2)))
        if hh == h or fac < 1.0:
            h = hh * fac
        else:
            h = max(h, hh * fac)
    while iout < nout:
        for j in range(NS):
            out[iout, j] = y[j]
        iout += 1
    ev = np.array(events, dtype=np.float64).reshape(-1, 6)
    if ev.shape[0] > 1:
        ev = ev[np.argsort(ev[:, 1], kind="stable")]
    return (out, ev, np.array([s, y[0], y[1], y[2], y[3], y[4]]),
            np.array(steps) if record else None)
