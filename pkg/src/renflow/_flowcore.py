"""Compiled kernels for the rescaled geodesic flow.

Every model is handled through two charts:

* an interior chart where the metric is conformal, ``g = exp(2u) |dx|^2``,
  and the state is ``(x, y, heading)`` with ``heading`` the Euclidean angle of
  the velocity;
* one collar chart per boundary component, with coordinates ``(rho, y)`` and
  inverse metric ``rho^2 diag(A, C)``; the state is ``(rho, y, xibar0, eta)``
  where ``xibar0`` is the cosine of the angle between the velocity and
  ``grad rho`` and ``eta`` the covector component dual to ``y``.

The collar equations are smooth up to ``rho = 0``, which is what lets b-time
runs start and stop on the boundary.  The flow switches charts with
hysteresis at ``rho_lo`` / ``rho_hi``.

State vector layout (length ``NSTATE``)::

    0..3   geometric coordinates (interior charts leave slot 3 at zero)
    4      the secondary clock: t in b-time runs, tau in physical runs
    5..8   tangent vector of the geometric coordinates (variational equation)
    9, 10  normal Jacobi field (j, j')
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

DISK, HALF_PLANE, CYLINDER, PERTURBED_DISK = 0, 1, 2, 3
INTERIOR, COLLAR = 0, 1

P_KIND, P_ELL, P_CX, P_CY, P_RB, P_AMP = 0, 1, 2, 3, 4, 5
P_RLO, P_RHI, P_BOXX, P_BOXY = 6, 7, 8, 9
P_SHIFT, P_SA, P_SY0, P_SW, P_PERIOD = 10, 11, 12, 13, 14
NPARAM = 16

NSTATE = 11
HALF_PI = 0.5 * math.pi
VAR, JAC = 1, 2

DONE, BOUNDARY, CUTOFF, LEFT_CHART, UNDERFLOW, MAXSTEPS = 0, 1, 2, 3, 4, 5

NREC = 14  # indep, state(11), mode, end
NEV = 16  # event index, indep, direction, state(11), mode, end

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
               22 / 525, -1 / 40])


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

@njit(cache=True)
def bump(prm, x, y, out):
    """phi and its first/second derivatives: out = (phi, px, py, pxx, pxy, pyy)."""
    for i in range(6):
        out[i] = 0.0
    a = prm[P_AMP]
    if a == 0.0 or int(prm[P_KIND]) != PERTURBED_DISK:
        return
    rb2 = prm[P_RB] * prm[P_RB]
    dx = x - prm[P_CX]
    dy = y - prm[P_CY]
    s = (dx * dx + dy * dy) / rb2
    if s >= 1.0:
        return
    q = 1.0 / (1.0 - s)
    phi = a * math.exp(1.0 - q)
    g1 = -q * q
    g2 = -2.0 * q * q * q
    sx = 2.0 * dx / rb2
    sy = 2.0 * dy / rb2
    sxx = 2.0 / rb2
    fs = phi * g1
    fss = phi * (g1 * g1 + g2)
    out[0] = phi
    out[1] = fs * sx
    out[2] = fs * sy
    out[3] = fss * sx * sx + fs * sxx
    out[4] = fss * sx * sy
    out[5] = fss * sy * sy + fs * sxx


@njit(cache=True)
def interior_geometry(prm, x, y, g):
    """Fill g = (rho, m, ux, uy, mx, my, uxx, uxy, uyy) with m = exp(-u)/rho."""
    kind = int(prm[P_KIND])
    if kind == CYLINDER:
        ell = prm[P_ELL]
        c = math.cos(ell * x)
        g[0] = c
        g[1] = 1.0 / ell
        g[2] = ell * math.tan(ell * x)
        g[3] = 0.0
        g[4] = 0.0
        g[5] = 0.0
        g[6] = ell * ell / (c * c)
        g[7] = 0.0
        g[8] = 0.0
    elif kind == HALF_PLANE:
        g[0] = y
        g[1] = 1.0
        g[2] = 0.0
        g[3] = -1.0 / y
        g[4] = 0.0
        g[5] = 0.0
        g[6] = 0.0
        g[7] = 0.0
        g[8] = 1.0 / (y * y)
    else:
        w = 1.0 - x * x - y * y
        g[0] = 0.5 * w
        g[1] = 1.0
        g[2] = 2.0 * x / w
        g[3] = 2.0 * y / w
        g[4] = 0.0
        g[5] = 0.0
        g[6] = 2.0 / w + 4.0 * x * x / (w * w)
        g[7] = 4.0 * x * y / (w * w)
        g[8] = 2.0 / w + 4.0 * y * y / (w * w)
        if kind == PERTURBED_DISK and prm[P_AMP] != 0.0:
            b = np.empty(6)
            bump(prm, x, y, b)
            if b[0] != 0.0:
                m = math.exp(-b[0])
                g[1] = m
                g[2] += b[1]
                g[3] += b[2]
                g[4] = -m * b[1]
                g[5] = -m * b[2]
                g[6] += b[3]
                g[7] += b[4]
                g[8] += b[5]


@njit(cache=True)
def interior_curvature(prm, x, y):
    """Gauss curvature -exp(-2u) Lap(u) in the interior chart."""
    g = np.empty(9)
    interior_geometry(prm, x, y, g)
    em = g[0] * g[1]
    return -(g[6] + g[8]) * em * em


@njit(cache=True)
def collar_coeffs(prm, rho, c):
    """Fill c = (A, sqrt(A), dA/drho, C, dC/drho, d2C/drho2)."""
    kind = int(prm[P_KIND])
    if kind == CYLINDER:
        ell = prm[P_ELL]
        a = 1.0 - rho * rho
        c[0] = a
        c[1] = math.sqrt(a) if a > 0.0 else 0.0
        c[2] = -2.0 * rho
        c[3] = 1.0 / (ell * ell)
        c[4] = 0.0
        c[5] = 0.0
    elif kind == HALF_PLANE:
        c[0] = 1.0
        c[1] = 1.0
        c[2] = 0.0
        c[3] = 1.0
        c[4] = 0.0
        c[5] = 0.0
    else:
        a = 1.0 - 2.0 * rho
        c[0] = a
        c[1] = math.sqrt(a) if a > 0.0 else 0.0
        c[2] = -2.0
        c[3] = 1.0 / a
        c[4] = 2.0 / (a * a)
        c[5] = 8.0 / (a * a * a)


@njit(cache=True)
def shift_omega(prm, y):
    """Boundary-defining-function shift omega evaluated at boundary coordinate y."""
    kind = int(prm[P_SHIFT])
    if kind == 0:
        return 0.0
    if kind == 1:
        return prm[P_SA]
    d = y - prm[P_SY0]
    per = prm[P_PERIOD]
    if per > 0.0:
        d = d - per * math.floor(d / per + 0.5)
    s = (d / prm[P_SW]) ** 2
    if s >= 1.0:
        return 0.0
    return prm[P_SA] * math.exp(1.0 - 1.0 / (1.0 - s))


@njit(cache=True)
def rho_and_y(prm, mode, s):
    """Boundary defining function and boundary coordinate of a state."""
    if mode == COLLAR:
        return s[0], s[1]
    kind = int(prm[P_KIND])
    if kind == CYLINDER:
        return math.cos(prm[P_ELL] * s[0]), s[1]
    if kind == HALF_PLANE:
        return s[1], s[0]
    return 0.5 * (1.0 - s[0] * s[0] - s[1] * s[1]), math.atan2(s[1], s[0])


@njit(cache=True)
def event_value(prm, mode, s, eps):
    rho, y = rho_and_y(prm, mode, s)
    return rho * math.exp(shift_omega(prm, y)) - eps


@njit(cache=True)
def _cossin(psi):
    """cos and sin with exact zeros at multiples of the float pi/2."""
    k = math.floor(psi / HALF_PI + 0.5)
    r = psi - k * HALF_PI
    c = math.cos(r)
    sn = math.sin(r)
    q = int(k) % 4
    if q == 0:
        return c, sn
    if q == 1:
        return -sn, c
    if q == 2:
        return -c, -sn
    return sn, -c


# ---------------------------------------------------------------------------
# chart conversions
# ---------------------------------------------------------------------------

@njit(cache=True)
def _phi_at(prm, x, y):
    if int(prm[P_KIND]) != PERTURBED_DISK or prm[P_AMP] == 0.0:
        return 0.0
    b = np.empty(6)
    bump(prm, x, y, b)
    return b[0]


@njit(cache=True)
def _to_collar_geo(prm, q, out):
    """Interior (x, y, heading) -> collar (rho, y, xibar0, eta); returns end."""
    kind = int(prm[P_KIND])
    cpsi, spsi = _cossin(q[2])
    if kind == CYLINDER:
        ell = prm[P_ELL]
        rho = math.cos(ell * q[0])
        end = 1 if q[0] >= 0.0 else -1
        out[0] = rho
        out[1] = q[1]
        out[2] = -end * cpsi
        out[3] = ell * spsi / rho
        return end
    if kind == HALF_PLANE:
        out[0] = q[1]
        out[1] = q[0]
        out[2] = spsi
        out[3] = cpsi / q[1]
        return 1
    x = q[0]
    y = q[1]
    r = math.sqrt(x * x + y * y)
    rho = 0.5 * (1.0 - r * r)
    out[0] = rho
    out[1] = math.atan2(y, x)
    out[2] = -(x * cpsi + y * spsi) / r if r > 0.0 else 0.0
    out[3] = (x * spsi - y * cpsi) / rho * math.exp(_phi_at(prm, x, y))
    return 1


@njit(cache=True)
def _to_interior_geo(prm, end, q, out):
    """Collar (rho, y, xibar0, eta) -> interior (x, y, heading)."""
    kind = int(prm[P_KIND])
    rho = q[0]
    if kind == CYLINDER:
        ell = prm[P_ELL]
        t = end * math.acosh(1.0 / rho)
        out[0] = 2.0 * math.atan(math.tanh(0.5 * t)) / ell
        out[1] = q[1]
        out[2] = math.atan2(rho * q[3] / ell, -end * q[2])
    elif kind == HALF_PLANE:
        out[0] = q[1]
        out[1] = rho
        out[2] = math.atan2(q[2], rho * q[3])
    else:
        r = math.sqrt(1.0 - 2.0 * rho)
        out[0] = r * math.cos(q[1])
        out[1] = r * math.sin(q[1])
        w = math.exp(-_phi_at(prm, out[0], out[1]))
        out[2] = q[1] + math.atan2(rho * q[3] * w / r, -q[2])
    out[3] = 0.0


@njit(cache=True)
def _wrap(d):
    return d - 2.0 * math.pi * math.floor(d / (2.0 * math.pi) + 0.5)


@njit(cache=True)
def switch_chart(prm, mode, end, s):
    """Convert s in place to the other chart; returns (new mode, new end).

    The tangent vector in slots 5..8 is carried by a central-difference
    Jacobian of the conversion map.
    """
    kind = int(prm[P_KIND])
    q = s[0:4].copy()
    new = np.zeros(4)
    plus = np.zeros(4)
    minus = np.zeros(4)
    jac = np.zeros((4, 4))
    need = False
    for i in range(5, 9):
        if s[i] != 0.0:
            need = True
    if mode == INTERIOR:
        new_end = _to_collar_geo(prm, q, new)
        ncomp = 3 if need else 0
        angular_out = 1 if (kind == DISK or kind == PERTURBED_DISK) else -1
        for j in range(ncomp):
            h = 1e-7 * max(1.0, abs(q[j]))
            qp = q.copy()
            qm = q.copy()
            qp[j] += h
            qm[j] -= h
            _to_collar_geo(prm, qp, plus)
            _to_collar_geo(prm, qm, minus)
            for i in range(4):
                d = plus[i] - minus[i]
                if i == angular_out:
                    d = _wrap(d)
                jac[i, j] = d / (2.0 * h)
        new_mode = COLLAR
    else:
        new_end = end
        _to_interior_geo(prm, end, q, new)
        for j in range(4 if need else 0):
            h = 1e-7 * max(1.0, abs(q[j]))
            qp = q.copy()
            qm = q.copy()
            qp[j] += h
            qm[j] -= h
            _to_interior_geo(prm, end, qp, plus)
            _to_interior_geo(prm, end, qm, minus)
            for i in range(3):
                d = plus[i] - minus[i]
                if i == 2:
                    d = _wrap(d)
                jac[i, j] = d / (2.0 * h)
        new_mode = INTERIOR
    dv = s[5:9].copy()
    for i in range(4):
        s[i] = new[i]
        acc = 0.0
        for j in range(4):
            acc += jac[i, j] * dv[j]
        s[5 + i] = acc
    return new_mode, new_end


@njit(cache=True)
def b_view(prm, mode, end, s):
    """(rho, y, xibar0, eta) of a state in either chart."""
    if mode == COLLAR:
        return s[0], s[1], s[2], s[3]
    out = np.empty(4)
    _to_collar_geo(prm, s[0:4], out)
    return out[0], out[1], out[2], out[3]


@njit(cache=True)
def b_view_rows(prm, rec):
    """Rows of (rho, y, xibar0, eta, end) for an array of records."""
    n = rec.shape[0]
    out = np.empty((n, 5))
    for i in range(n):
        mode = int(rec[i, 12])
        end = int(rec[i, 13])
        s = rec[i, 1:12]
        a, b, c, d = b_view(prm, mode, end, s)
        out[i, 0] = a
        out[i, 1] = b
        out[i, 2] = c
        out[i, 3] = d
        out[i, 4] = end_of(prm, mode, end, s)
    return out


@njit(cache=True)
def to_interior(prm, end, q):
    out = np.empty(4)
    _to_interior_geo(prm, end, q, out)
    return out


@njit(cache=True)
def to_collar(prm, q):
    out = np.empty(4)
    end = _to_collar_geo(prm, q, out)
    return out, end


@njit(cache=True)
def end_of(prm, mode, end, s):
    if mode == INTERIOR and int(prm[P_KIND]) == CYLINDER:
        return 1 if s[0] >= 0.0 else -1
    return end


@njit(cache=True)
def chart_point(prm, mode, end, s):
    """Global chart position and b-time chart velocity (X, Y, VX, VY)."""
    if mode == INTERIOR:
        g = np.empty(9)
        interior_geometry(prm, s[0], s[1], g)
        cp, sp = _cossin(s[2])
        return s[0], s[1], g[1] * cp, g[1] * sp
    kind = int(prm[P_KIND])
    rho = s[0]
    if kind == HALF_PLANE:
        return s[1], rho, rho * s[3], s[2]
    if kind == CYLINDER:
        ell = prm[P_ELL]
        t = end * math.acosh(1.0 / rho) if rho > 0.0 else end * math.inf
        x = 2.0 * math.atan(math.tanh(0.5 * t)) / ell
        return x, s[1], -end * s[2] / ell, rho * s[3] / (ell * ell)
    r = math.sqrt(1.0 - 2.0 * rho)
    ca = math.cos(s[1])
    sa = math.sin(s[1])
    vr = -s[2]
    va = rho * s[3] / r
    return r * ca, r * sa, vr * ca - va * sa, vr * sa + va * ca


# ---------------------------------------------------------------------------
# vector field
# ---------------------------------------------------------------------------

@njit(cache=True)
def rhs(prm, mode, s, phys, floor, flags, out):
    for i in range(NSTATE):
        out[i] = 0.0
    if mode == INTERIOR:
        g = np.empty(9)
        interior_geometry(prm, s[0], s[1], g)
        rho = g[0]
        m = g[1]
        cp, sp = _cossin(s[2])
        nrm = -sp * g[2] + cp * g[3]
        out[0] = m * cp
        out[1] = m * sp
        out[2] = m * nrm
        if flags & VAR:
            d0 = s[5]
            d1 = s[6]
            d2 = s[7]
            out[5] = g[4] * cp * d0 + g[5] * cp * d1 - m * sp * d2
            out[6] = g[4] * sp * d0 + g[5] * sp * d1 + m * cp * d2
            n0 = g[4] * nrm + m * (-sp * g[6] + cp * g[7])
            n1 = g[5] * nrm + m * (-sp * g[7] + cp * g[8])
            n2 = m * (-cp * g[2] - sp * g[3])
            out[7] = n0 * d0 + n1 * d1 + n2 * d2
        kappa = -(g[6] + g[8]) * (rho * m) ** 2
    else:
        c = np.empty(6)
        rho = s[0]
        collar_coeffs(prm, rho, c)
        xi = s[2]
        eta = s[3]
        sa = c[1]
        quad = rho * c[3] * eta * eta + 0.5 * rho * rho * c[4] * eta * eta
        out[0] = sa * xi
        out[1] = rho * c[3] * eta
        out[2] = -sa * quad
        if flags & VAR:
            dsa = 0.5 * c[2] / sa if sa > 0.0 else 0.0
            d0 = s[5]
            d2 = s[7]
            d3 = s[8]
            dquad = eta * eta * (c[3] + 2.0 * rho * c[4] + 0.5 * rho * rho * c[5])
            out[5] = dsa * xi * d0 + sa * d2
            out[6] = (c[3] + rho * c[4]) * eta * d0 + rho * c[3] * d3
            out[7] = (-dsa * quad - sa * dquad) * d0 \
                - sa * (2.0 * rho * c[3] * eta + rho * rho * c[4] * eta) * d3
        kappa = -1.0
    if phys:
        for i in range(4):
            out[i] *= rho
        for i in range(5, 9):
            out[i] *= rho
        out[4] = rho
        if flags & JAC:
            out[9] = s[10]
            out[10] = -kappa * s[9]
    else:
        out[4] = 1.0 / max(rho, floor)


@njit(cache=True)
def dp_step(prm, mode, s, h, phys, floor, flags, k, ynew, yerr):
    """One Dormand-Prince step of size h from s (k is 7 x NSTATE scratch)."""
    tmp = np.empty(NSTATE)
    rhs(prm, mode, s, phys, floor, flags, k[0])
    for st in range(1, 7):
        for i in range(NSTATE):
            acc = 0.0
            for j in range(st):
                acc += _A[st, j] * k[j, i]
            tmp[i] = s[i] + h * acc
        rhs(prm, mode, tmp, phys, floor, flags, k[st])
    for i in range(NSTATE):
        ynew[i] = tmp[i]
        acc = 0.0
        for j in range(7):
            acc += _E[j] * k[j, i]
        yerr[i] = h * acc


@njit(cache=True)
def err_norm(mode, s, ynew, yerr, flags, clock_weight, atol, rtol):
    worst = 0.0
    ngeo = 3 if mode == INTERIOR else 4
    for i in range(ngeo):
        sc = atol + rtol * max(abs(s[i]), abs(ynew[i]))
        worst = max(worst, abs(yerr[i]) / sc)
    if clock_weight:
        sc = atol + rtol * max(abs(s[4]), abs(ynew[4]))
        worst = max(worst, abs(yerr[4]) / sc)
    if flags & JAC:
        for i in range(9, 11):
            sc = atol + rtol * max(abs(s[i]), abs(ynew[i]))
            worst = max(worst, abs(yerr[i]) / sc)
    return worst


@njit(cache=True)
def _state_g(prm, mode, s, which, eps):
    if which == 0:
        return event_value(prm, mode, s, eps)
    return s[0]


@njit(cache=True)
def locate(prm, mode, s, h, phys, floor, flags, which, eps, g0, g1, k):
    """Step length in (0, h] at which the event function vanishes.

    Illinois-modified secant on the step length, each trial being a fresh
    Runge-Kutta step from the step start; falls back to bisection when the
    secant stalls.
    """
    ytr = np.empty(NSTATE)
    etr = np.empty(NSTATE)
    a = 0.0
    fa = g0
    b = h
    fb = g1
    best = b
    fbest = abs(fb)
    side = 0
    for it in range(100):
        if it < 60 and fa != fb:
            x = (fa * b - fb * a) / (fa - fb)
            if not (min(a, b) < x < max(a, b)):
                x = 0.5 * (a + b)
        else:
            x = 0.5 * (a + b)
        dp_step(prm, mode, s, x, phys, floor, flags, k, ytr, etr)
        fx = _state_g(prm, mode, ytr, which, eps)
        if abs(fx) < fbest:
            best = x
            fbest = abs(fx)
        if fx == 0.0:
            return x
        if fx * fb > 0.0:
            b = x
            fb = fx
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a = x
            fa = fx
            if side == 1:
                fb *= 0.5
            side = 1
        if abs(b - a) <= 1e-15 * max(1.0, abs(h)) or fbest <= 1e-15:
            break
    return best


@njit(cache=True)
def project(prm, mode, s):
    """Renormalize onto the unit cosphere; returns the drift before projection."""
    if mode == INTERIOR:
        return 0.0
    c = np.empty(6)
    collar_coeffs(prm, s[0], c)
    q = s[2] * s[2] + s[0] * s[0] * c[3] * s[3] * s[3]
    if q > 0.0:
        f = 1.0 / math.sqrt(q)
        s[2] *= f
        s[3] *= f
    return abs(q - 1.0)


@njit(cache=True)
def maybe_switch(prm, mode, end, s):
    kind = int(prm[P_KIND])
    if kind == HALF_PLANE:
        return mode, end
    if mode == INTERIOR:
        rho, _ = rho_and_y(prm, mode, s)
        if rho < prm[P_RLO]:
            return switch_chart(prm, mode, end, s)
    else:
        if s[0] > prm[P_RHI]:
            return switch_chart(prm, mode, end, s)
    return mode, end


@njit(cache=True)
def _grow(arr, n):
    if n < arr.shape[0]:
        return arr
    new = np.empty((2 * arr.shape[0], arr.shape[1]))
    new[:n] = arr[:n]
    return new


@njit(cache=True)
def _put(rec, n, indep, s, mode, end):
    rec[n, 0] = indep
    for i in range(NSTATE):
        rec[n, 1 + i] = s[i]
    rec[n, 12] = mode
    rec[n, 13] = end


@njit(cache=True)
def integrate(prm, mode, end, s0, phys, duration, eps_events, stop_boundary,
              floor, clock_weight, flags, t_eval, cutoff, atol, rtol, h0,
              record, max_steps):
    """Adaptive integration with event location and chart switching.

    Returns (status, records, events, final state, mode, end, final indep,
    max cosphere drift, accepted steps).
    """
    s = s0.copy()
    k = np.empty((7, NSTATE))
    ynew = np.empty(NSTATE)
    yerr = np.empty(NSTATE)
    yev = np.empty(NSTATE)
    eev = np.empty(NSTATE)
    rec = np.empty((256, NREC))
    ev = np.empty((16, NEV))
    nrec = 0
    nev = 0
    nevents = eps_events.shape[0]
    gprev = np.empty(nevents)
    gnew = np.empty(nevents)
    sig = np.empty(nevents)
    kind = int(prm[P_KIND])

    mode, end = maybe_switch(prm, mode, end, s)
    indep = 0.0
    _put(rec, nrec, indep, s, mode, end)
    nrec += 1
    for e in range(nevents):
        gprev[e] = event_value(prm, mode, s, eps_events[e])

    stop = min(duration, cutoff)
    h = h0
    status = DONE
    drift = 0.0
    ie = 0
    nsteps = 0
    while True:
        remaining = stop - indep
        if remaining <= 1e-14 * max(1.0, abs(stop)):
            status = DONE if duration <= cutoff else CUTOFF
            break
        if nsteps >= max_steps:
            status = MAXSTEPS
            break
        while ie < t_eval.shape[0] and t_eval[ie] <= indep + 1e-14 * max(1.0, abs(indep)):
            ie += 1
        hstep = min(h, remaining)
        hit_eval = False
        if ie < t_eval.shape[0] and indep + hstep >= t_eval[ie]:
            hstep = t_eval[ie] - indep
            hit_eval = True
        dp_step(prm, mode, s, hstep, phys, floor, flags, k, ynew, yerr)
        en = err_norm(mode, s, ynew, yerr, flags, clock_weight, atol, rtol)
        if mode == INTERIOR and kind != HALF_PLANE:
            # the interior chart field is regular past the boundary; a long
            # step must not jump over the collar
            rnew, ynw = rho_and_y(prm, mode, ynew)
            if not (rnew > 0.5 * prm[P_RLO]):
                en = 2.0 if en <= 1.0 else en
        if not (en <= 1.0):
            if en != en:
                h = 0.1 * hstep
            else:
                h = hstep * max(0.1, 0.9 * en ** -0.2)
            if h < 1e-13 * max(1.0, abs(indep)):
                status = UNDERFLOW
                break
            continue
        nsteps += 1

        # boundary crossing (b-time, collar only)
        sb = -1.0
        if stop_boundary and not phys and mode == COLLAR and s[0] > 0.0 and ynew[0] <= 0.0:
            sb = locate(prm, mode, s, hstep, phys, floor, flags, 1, 0.0, s[0], ynew[0], k)

        # threshold events
        nloc = 0
        for e in range(nevents):
            gnew[e] = event_value(prm, mode, ynew, eps_events[e])
            sig[e] = -1.0
            if gprev[e] != 0.0 and (gprev[e] > 0.0) != (gnew[e] > 0.0):
                sg = locate(prm, mode, s, hstep, phys, floor, flags, 0, eps_events[e],
                            gprev[e], gnew[e], k)
                if sb < 0.0 or sg < sb:
                    sig[e] = sg
                    nloc += 1
        while nloc > 0:
            best = -1
            for e in range(nevents):
                if sig[e] >= 0.0 and (best < 0 or sig[e] < sig[best]):
                    best = e
            dp_step(prm, mode, s, sig[best], phys, floor, flags, k, yev, eev)
            ev = _grow(ev, nev)
            ev[nev, 0] = best
            ev[nev, 1] = indep + sig[best]
            ev[nev, 2] = 1.0 if gnew[best] > 0.0 else -1.0
            for i in range(NSTATE):
                ev[nev, 3 + i] = yev[i]
            ev[nev, 14] = mode
            ev[nev, 15] = end
            nev += 1
            sig[best] = -1.0
            nloc -= 1

        if sb >= 0.0:
            dp_step(prm, mode, s, sb, phys, floor, flags, k, ynew, yerr)
            ynew[0] = 0.0
            ynew[2] = -1.0 if ynew[2] < 0.0 else 1.0
            indep += sb
            for i in range(NSTATE):
                s[i] = ynew[i]
            rec = _grow(rec, nrec)
            _put(rec, nrec, indep, s, mode, end)
            nrec += 1
            status = BOUNDARY
            break

        for i in range(NSTATE):
            s[i] = ynew[i]
        indep = t_eval[ie] if hit_eval else indep + hstep
        drift = max(drift, project(prm, mode, s))
        mode, end = maybe_switch(prm, mode, end, s)
        for e in range(nevents):
            gprev[e] = event_value(prm, mode, s, eps_events[e])
        if record or hit_eval:
            rec = _grow(rec, nrec)
            _put(rec, nrec, indep, s, mode, end)
            nrec += 1
        if kind == HALF_PLANE and (abs(s[1]) > prm[P_BOXX] or s[0] > prm[P_BOXY]):
            status = LEFT_CHART
            break
        if en == 0.0:
            fac = 5.0
        else:
            fac = min(5.0, max(0.2, 0.9 * en ** -0.2))
        if not hit_eval:
            h = hstep * fac
    if not record:
        rec = _grow(rec, nrec)
        _put(rec, nrec, indep, s, mode, end)
        nrec += 1
    return status, rec[:nrec].copy(), ev[:nev].copy(), s, mode, end, indep, drift, nsteps


# ---------------------------------------------------------------------------
# shooting and intersections
# ---------------------------------------------------------------------------

@njit(cache=True)
def shoot(prm, p, end, eta0, atol, rtol, tau_max):
    """Flow the incoming boundary ray (p, eta0) to the boundary.

    Returns (status, exit y, d(exit y)/d(eta0), exit end).
    """
    s0 = np.zeros(NSTATE)
    s0[1] = p
    s0[2] = 1.0
    s0[3] = eta0
    s0[8] = 1.0
    status, rec, ev, s, mode, end_out, indep, drift, nst = integrate(
        prm, COLLAR, end, s0, False, math.inf, np.empty(0), True, 1e-3, False,
        VAR, np.empty(0), tau_max, atol, rtol, 1e-2, False, 200000)
    return status, s[1], s[6], end_out


@njit(cache=True)
def _shot_residual(prm, p, p_end, target, q_end, period_mod, eta, atol, rtol, tau_max):
    status, y, dy, e = shoot(prm, p, p_end, eta, atol, rtol, tau_max)
    if status != BOUNDARY or e != q_end:
        return False, 0.0, 0.0
    if period_mod > 0.0:
        d = (y - p) % period_mod
        return True, d - target, dy
    return True, y - target, dy


@njit(cache=True)
def _valid_probe(prm, p, p_end, target, q_end, period_mod, good, bad, atol, rtol, tau_max):
    """Walk from a valid eta toward an invalid one; return the last valid point."""
    ok, r, dr = _shot_residual(prm, p, p_end, target, q_end, period_mod, good,
                               atol, rtol, tau_max)
    for it in range(45):
        mid = 0.5 * (good + bad)
        okm, rm, drm = _shot_residual(prm, p, p_end, target, q_end, period_mod, mid,
                                      atol, rtol, tau_max)
        if okm:
            good = mid
            r = rm
        else:
            bad = mid
    return good, r


@njit(cache=True)
def connect_eta(prm, p, p_end, target, q_end, period_mod, guess, atol, rtol,
                tau_max, ytol):
    """Solve exit(eta0) = target by bracketed, safeguarded Newton iteration.

    ``period_mod > 0`` compares exits as (y - p) mod period against target.
    Returns (status, eta0, shots) with status 0 on success, 1 for no bracket,
    2 when even the starting guess cannot be evaluated.
    """
    shots = 0
    ok, r0, d0 = _shot_residual(prm, p, p_end, target, q_end, period_mod, guess,
                                atol, rtol, tau_max)
    shots += 1
    if not ok:
        ok, r0, d0 = _shot_residual(prm, p, p_end, target, q_end, period_mod, 0.0,
                                    atol, rtol, tau_max)
        shots += 1
        if not ok:
            return 2, guess, shots
        guess = 0.0
    if abs(r0) <= ytol:
        return 0, guess, shots
    # plain Newton from a good guess usually converges in two or three shots
    x = guess
    r = r0
    dr = d0
    for it in range(4):
        if dr == 0.0 or dr != dr or abs(r) > 0.5:
            break
        xn = x - r / dr
        ok, rn, drn = _shot_residual(prm, p, p_end, target, q_end, period_mod, xn,
                                     atol, rtol, tau_max)
        shots += 1
        if not ok or abs(rn) >= abs(r):
            break
        x = xn
        r = rn
        dr = drn
        if abs(r) <= ytol:
            return 0, x, shots
    # a Newton step from the guess tells which side to search first
    step0 = 1e-3 * max(1.0, abs(guess))
    direction = 1.0
    if d0 != 0.0 and d0 == d0:
        nstep = -r0 / d0
        direction = 1.0 if nstep > 0 else -1.0
        step0 = max(min(abs(nstep) * 1.5, 1e3), 1e-12)
    lo = guess
    rlo = r0
    hi = guess
    rhi = r0
    found = False
    for kk in range(60):
        for sgn in (direction, -direction):
            eta = guess + sgn * step0 * 2.0 ** kk
            ok, r, dr = _shot_residual(prm, p, p_end, target, q_end, period_mod, eta,
                                       atol, rtol, tau_max)
            shots += 1
            if not ok:
                eta, r = _valid_probe(prm, p, p_end, target, q_end, period_mod, guess,
                                      eta, atol, rtol, tau_max)
                shots += 45
            if r * r0 <= 0.0:
                lo = min(guess, eta)
                hi = max(guess, eta)
                if eta > guess:
                    rlo = r0
                    rhi = r
                else:
                    rlo = r
                    rhi = r0
                found = True
                break
        if found:
            break
    if not found:
        return 1, guess, shots
    x = lo if abs(rlo) < abs(rhi) else hi
    for it in range(200):
        ok, r, dr = _shot_residual(prm, p, p_end, target, q_end, period_mod, x,
                                   atol, rtol, tau_max)
        shots += 1
        if ok and abs(r) <= ytol:
            return 0, x, shots
        if ok:
            if r * rlo > 0.0:
                lo = x
                rlo = r
            else:
                hi = x
                rhi = r
        else:
            # invalid inside the bracket: shrink toward the better end
            if abs(rlo) < abs(rhi):
                hi = x
            else:
                lo = x
        if hi - lo <= 1e-15 * max(1.0, abs(x)):
            return 0, x, shots
        xn = 0.5 * (lo + hi)
        if ok and dr != 0.0 and dr == dr:
            cand = x - r / dr
            if lo < cand < hi:
                xn = cand
        x = xn
    return 0, x, shots


@njit(cache=True)
def _rec_point(prm, rec, i, sigma, k, phys):
    """Chart position and velocity at record row i advanced by sigma."""
    s = rec[i, 1:12].copy()
    mode = int(rec[i, 12])
    end = int(rec[i, 13])
    if sigma != 0.0:
        ynew = np.empty(NSTATE)
        yerr = np.empty(NSTATE)
        dp_step(prm, mode, s, sigma, phys, 1e-3, 0, k, ynew, yerr)
        s = ynew
    x, y, vx, vy = chart_point(prm, mode, end, s)
    if phys:
        rho, yb = rho_and_y(prm, mode, s)
        vx *= rho
        vy *= rho
    return x, y, vx, vy


@njit(cache=True)
def intersect_records(prm, ra, rb, shift_b, phys_a, phys_b):
    """Locate the crossing of two recorded b-time trajectories.

    Returns (found, X, Y, oriented angle from a to b, index a, sigma a,
    index b, sigma b, residual distance).
    """
    na = ra.shape[0]
    nb = rb.shape[0]
    pa = np.empty((na, 2))
    pb = np.empty((nb, 2))
    for i in range(na):
        x, y, vx, vy = chart_point(prm, int(ra[i, 12]), int(ra[i, 13]), ra[i, 1:12])
        pa[i, 0] = x
        pa[i, 1] = y
    for i in range(nb):
        x, y, vx, vy = chart_point(prm, int(rb[i, 12]), int(rb[i, 13]), rb[i, 1:12])
        pb[i, 0] = x
        pb[i, 1] = y + shift_b
    best_d = math.inf
    bi = -1
    bj = -1
    bu = 0.0
    bv = 0.0
    for i in range(na - 1):
        ax0 = pa[i, 0]
        ay0 = pa[i, 1]
        ax1 = pa[i + 1, 0]
        ay1 = pa[i + 1, 1]
        if not (np.isfinite(ax0) and np.isfinite(ax1) and np.isfinite(ay0) and np.isfinite(ay1)):
            continue
        for j in range(nb - 1):
            bx0 = pb[j, 0]
            by0 = pb[j, 1]
            bx1 = pb[j + 1, 0]
            by1 = pb[j + 1, 1]
            if max(bx0, bx1) < min(ax0, ax1) - 1e-9 or min(bx0, bx1) > max(ax0, ax1) + 1e-9:
                continue
            if max(by0, by1) < min(ay0, ay1) - 1e-9 or min(by0, by1) > max(ay0, ay1) + 1e-9:
                continue
            dax = ax1 - ax0
            day = ay1 - ay0
            dbx = bx1 - bx0
            dby = by1 - by0
            den = dax * dby - day * dbx
            if den == 0.0:
                continue
            u = ((bx0 - ax0) * dby - (by0 - ay0) * dbx) / den
            v = ((bx0 - ax0) * day - (by0 - ay0) * dax) / den
            if -1e-9 <= u <= 1.0 + 1e-9 and -1e-9 <= v <= 1.0 + 1e-9:
                best_d = 0.0
                bi = i
                bj = j
                bu = u
                bv = v
                break
        if bi >= 0:
            break
    if bi < 0:
        # no polyline crossing: report the closest vertex pair
        for i in range(na):
            for j in range(nb):
                d = math.hypot(pa[i, 0] - pb[j, 0], pa[i, 1] - pb[j, 1])
                if d < best_d:
                    best_d = d
                    bi = i
                    bj = j
        return False, pa[bi, 0], pa[bi, 1], 0.0, bi, 0.0, bj, 0.0, best_d
    k = np.empty((7, NSTATE))
    sa = bu * (ra[bi + 1, 0] - ra[bi, 0])
    sb = bv * (rb[bj + 1, 0] - rb[bj, 0])
    xa = 0.0
    ya = 0.0
    vxa = 0.0
    vya = 0.0
    xb = 0.0
    yb = 0.0
    vxb = 0.0
    vyb = 0.0
    dist = math.inf
    for it in range(50):
        xa, ya, vxa, vya = _rec_point(prm, ra, bi, sa, k, phys_a)
        xb, yb, vxb, vyb = _rec_point(prm, rb, bj, sb, k, phys_b)
        yb += shift_b
        fx = xa - xb
        fy = ya - yb
        dist = math.hypot(fx, fy)
        if dist < 1e-14:
            break
        # solve [va, -vb] [dsa, dsb] = -f
        det = vxa * (-vyb) - vya * (-vxb)
        if det == 0.0:
            break
        dsa = (-fx * (-vyb) + fy * (-vxb)) / det
        dsb = (vxa * (-fy) - vya * (-fx)) / det
        sa += dsa
        sb += dsb
        if abs(dsa) + abs(dsb) < 1e-15:
            xa, ya, vxa, vya = _rec_point(prm, ra, bi, sa, k, phys_a)
            xb, yb, vxb, vyb = _rec_point(prm, rb, bj, sb, k, phys_b)
            yb += shift_b
            dist = math.hypot(xa - xb, ya - yb)
            break
    ang = math.atan2(vxa * vyb - vya * vxb, vxa * vxb + vya * vyb)
    return True, xa, ya, ang, bi, sa, bj, sb, dist


@njit(cache=True)
def curvature_density(prm, xs, ys):
    """kappa * (area density) = -Laplacian(u) at chart points (conformal charts)."""
    n = xs.shape[0]
    out = np.empty(n)
    g = np.empty(9)
    for i in range(n):
        interior_geometry(prm, xs[i], ys[i], g)
        out[i] = -(g[6] + g[8])
    return out


@njit(cache=True)
def _chord_side(x, y, cx, cy, dx, dy):
    q = 2.0 / (1.0 + x * x + y * y)
    return (dx - cx) * (q * y - cy) - (dy - cy) * (q * x - cx)


@njit(cache=True)
def chord_crossing(prm, rec, cx, cy, dx, dy):
    """First crossing of a recorded b-time trajectory with the disk geodesic c -> d.

    The disk geodesic is the chord c -> d in the Klein model.  Returns
    (found, X, Y, VX, VY, row, sigma).
    """
    n = rec.shape[0]
    prev = 0.0
    k = np.empty((7, NSTATE))
    for i in range(n):
        x, y, vx, vy = chart_point(prm, int(rec[i, 12]), int(rec[i, 13]), rec[i, 1:12])
        if not (np.isfinite(x) and np.isfinite(y)):
            prev = 0.0
            continue
        g = _chord_side(x, y, cx, cy, dx, dy)
        if g == 0.0:
            return True, x, y, vx, vy, i, 0.0
        if i > 0 and prev * g < 0.0:
            j = i - 1
            h = rec[i, 0] - rec[j, 0]
            lo = 0.0
            hi = h
            glo = prev
            ghi = g
            sig = h * glo / (glo - ghi)
            for it in range(60):
                x, y, vx, vy = _rec_point(prm, rec, j, sig, k, False)
                gs = _chord_side(x, y, cx, cy, dx, dy)
                if gs == 0.0 or hi - lo < 1e-15 * max(1.0, h):
                    break
                if gs * glo > 0.0:
                    lo = sig
                    glo = gs
                else:
                    hi = sig
                    ghi = gs
                # secant inside the bracket, with a bisection fallback
                cand = lo + (hi - lo) * glo / (glo - ghi)
                if not (lo < cand < hi) or abs(gs) > 0.5 * abs(glo + ghi):
                    cand = 0.5 * (lo + hi)
                if abs(cand - sig) < 1e-16 * max(1.0, h):
                    break
                sig = cand
            return True, x, y, vx, vy, j, sig
        prev = g
    return False, 0.0, 0.0, 0.0, 0.0, -1, 0.0
