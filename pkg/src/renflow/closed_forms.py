"""Closed-form hyperbolic geometry used as fast paths for the model surfaces."""

from __future__ import annotations

import cmath
import math

import numpy as np


# -- disk ------------------------------------------------------------------

def disk_distance(a: complex, b: complex) -> float:
    m = abs((a - b) / (1.0 - a.conjugate() * b))
    return 2.0 * math.atanh(m)


def disk_extended_distance(a: complex, b: complex) -> float:
    """d(a, b) + ln rho(a) + ln rho(b) for rho = (1 - |z|^2)/2, extended to |z| = 1."""
    den = 1.0 - a.conjugate() * b
    m = abs(a - b) / abs(den)
    return 2.0 * math.log(0.5 * (1.0 + m) * abs(den))


def disk_ren_length(p: float, q: float) -> float:
    """Renormalized length of the disk geodesic between boundary angles."""
    return 2.0 * math.log(abs(cmath.exp(1j * p) - cmath.exp(1j * q)))


def disk_ray_endpoints(z: complex, psi: float):
    """Backward and forward boundary points of the ray through z with heading psi."""
    w = cmath.exp(1j * psi)
    fwd = (w + z) / (1.0 + z.conjugate() * w)
    bwd = (-w + z) / (1.0 - z.conjugate() * w)
    return bwd, fwd


def disk_point_along(z: complex, psi: float, s):
    """Point and heading at distance s along the ray through z (vectorized in s)."""
    w = np.tanh(0.5 * np.asarray(s)) * np.exp(1j * psi)
    den = 1.0 + np.conj(z) * w
    pt = (w + z) / den
    heading = psi - 2.0 * np.angle(den)
    return pt, heading


def disk_circle_radius(eps: float) -> float:
    """Euclidean radius of {rho = eps}."""
    return math.sqrt(1.0 - 2.0 * eps)


def disk_chord_length(eps: float, omega):
    """Length inside {rho >= eps} of the chord entering at angle omega."""
    r = disk_circle_radius(eps)
    th = 2.0 * r / (1.0 + r * r)
    return 2.0 * np.arctanh(th * np.sin(omega))


def disk_mobius(c: float, theta: float, z: complex) -> complex:
    return cmath.exp(1j * theta) * (z + c) / (c * z + 1.0)


def disk_mobius_derivative_modulus(c: float, z: complex) -> float:
    return (1.0 - c * c) / abs(c * z + 1.0) ** 2


def hyperbolic_disk_of(center: complex, radius: float):
    """Hyperbolic centre (as a chart point) and radius of a Euclidean disk."""
    d = abs(center)
    u = center / d if d > 0 else 1.0 + 0j
    a1 = math.atanh(d - radius)
    a2 = math.atanh(d + radius)
    return u * math.tanh(0.5 * (a1 + a2)), a2 - a1


def geodesic_clears_disk(a: complex, b: complex, ch: complex, rh: float, margin: float = 0.0) -> bool:
    """True when the geodesic with boundary endpoints a, b stays at hyperbolic
    distance > rh + margin from the chart point ch."""
    ta = (a - ch) / (1.0 - ch.conjugate() * a)
    tb = (b - ch) / (1.0 - ch.conjugate() * b)
    gap = abs(cmath.phase(tb / ta))
    r0 = math.tan(0.25 * (math.pi - gap))
    return 2.0 * math.atanh(min(r0, 1.0 - 1e-16)) > rh + margin


def disk_triangle_area(a: complex, b: complex, c: complex) -> float:
    """Hyperbolic area of the geodesic triangle with interior vertices a, b, c."""
    total = 0.0
    for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
        tq = disk_tangent(p, q)
        tr = disk_tangent(p, r)
        total += abs(cmath.phase(tr / tq))
    return math.pi - total


def disk_tangent(z: complex, target: complex) -> complex:
    """Unit tangent at z of the geodesic from z toward target."""
    v = (target - z) / (1.0 - z.conjugate() * target)
    v = v * (1.0 - abs(z) ** 2)
    return v / abs(v)


# -- half-plane ------------------------------------------------------------

def half_plane_extended_distance(a, b) -> float:
    """d + ln y_a + ln y_b, finite also when either point is on y = 0."""
    (x1, y1), (x2, y2) = a, b
    u = (x1 - x2) ** 2 + (y1 - y2) ** 2
    return math.log(y1 * y2 + 0.5 * u + math.sqrt(0.25 * u * u + u * y1 * y2))


def half_plane_distance(a, b) -> float:
    (x1, y1), (x2, y2) = a, b
    u = (x1 - x2) ** 2 + (y1 - y2) ** 2
    return math.acosh(1.0 + u / (2.0 * y1 * y2))


# -- cylinder --------------------------------------------------------------

def cylinder_extended_distance(ell: float, a, b) -> float:
    """d + ln sech t_a + ln sech t_b for Fermi points (t, lifted theta)."""
    (t1, th1), (t2, th2) = a, b
    s1 = 0.0 if math.isinf(t1) else 1.0 / math.cosh(t1)
    s2 = 0.0 if math.isinf(t2) else 1.0 / math.cosh(t2)
    tanh1 = math.copysign(1.0, t1) if math.isinf(t1) else math.tanh(t1)
    tanh2 = math.copysign(1.0, t2) if math.isinf(t2) else math.tanh(t2)
    k = math.cosh(ell * (th1 - th2)) - tanh1 * tanh2
    return math.log(k + math.sqrt(max(k * k - (s1 * s2) ** 2, 0.0)))


def cylinder_distance(ell: float, a, b) -> float:
    (t1, th1), (t2, th2) = a, b
    c = math.cosh(t1) * math.cosh(t2) * math.cosh(ell * (th1 - th2)) - math.sinh(t1) * math.sinh(t2)
    return math.acosh(max(c, 1.0))


def cylinder_exit_length(eps: float, omega):
    """Length inside {sech t >= eps} of a ray entering it at angle omega."""
    a = math.sqrt(1.0 / (eps * eps) - 1.0)
    b = np.abs(np.sin(omega)) / eps
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    with np.errstate(divide="ignore"):
        return 2.0 * np.arctanh(lo / hi)
