"""Angle of deviation between two metrics with the same conformal infinity.

For a unit vector (x, xi) of g1 and an angle theta, the g1 geodesics through
x in directions xi and R_theta xi have boundary endpoints (z, z') and
(y, y').  The g2 geodesics with those endpoints cross at a point x~; the
oriented angle f between them there is the angle of deviation.  Theta_eps
is the Liouville average of f over {rho >= eps}.

Only the disk family is supported.  Geodesics that stay away from the bump
support are disk geodesics and are handled in closed form (Klein-model chord
intersection); the rest go through shooting and numerical intersection.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression

from . import _flowcore as fc
from . import closed_forms as cf
from .connect import GeodesicSpec, connect, crossing
from .errors import (BadParams, DegenerateTriangle, InsufficientSamples, NoIntersection,
                     NonConvexJ, Trapped)
from .geoflow import ChartRay, PhasePoint, exit_data, flow, initial_state, run_kernel
from .sampling import CHUNK, ratio_mean, run_chunks, santalo_draw
from .surface_models import SurfaceModel

PROFILE_CSV_HEADER = "eps,theta,Theta,mc_err,n"
CHECK_FLOOR = 1e-9
# integration tolerance for g2 geodesics inside Monte Carlo averages
MC_TOL = 1e-8


@dataclass(frozen=True)
class DeviationSample:
    base: ChartRay
    theta: float
    image_point: tuple
    image_cov: float  # heading of the base g2 geodesic at the image point
    f: float


@dataclass(frozen=True)
class SantaloSample:
    boundary_point: complex
    omega: float
    weight: float
    tau: float


# -- vectorized closed forms -------------------------------------------------

def _ray_endpoints(z, psi):
    w = np.exp(1j * psi)
    zc = np.conj(z)
    return (-w + z) / (1.0 - zc * w), (w + z) / (1.0 + zc * w)


def _clears(a, b, hull, margin=1e-9):
    if hull is None:
        return np.ones(np.shape(a), dtype=bool)
    ch, rh = hull
    ta = (a - ch) / (1.0 - np.conj(ch) * a)
    tb = (b - ch) / (1.0 - np.conj(ch) * b)
    gap = np.abs(np.angle(tb / ta))
    r0 = np.tan(0.25 * (np.pi - gap))
    return 2.0 * np.arctanh(np.minimum(r0, 1.0 - 1e-16)) > rh + margin


def _tangent(z, target):
    v = (target - z) / (1.0 - np.conj(z) * target)
    return v / np.abs(v)


def klein_crossing(a, b, c, d):
    """Crossing of disk geodesics a->b and c->d: (point, oriented angle, ok)."""
    u = b - a
    v = d - c
    den = u.real * v.imag - u.imag * v.real
    w = c - a
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w.real * v.imag - w.imag * v.real) / den
        s = (w.real * u.imag - w.imag * u.real) / den
    ok = (den != 0) & (t > 0) & (t < 1) & (s > 0) & (s < 1)
    k = a + t * u
    k2 = np.minimum(np.abs(k) ** 2, 1.0)
    p = k / (1.0 + np.sqrt(1.0 - k2))
    ang = np.angle(_tangent(p, d) / _tangent(p, b))
    return p, ang, ok


def _hull(model: SurfaceModel):
    b = model.bump
    if model.kind != "perturbed_disk" or b is None or b.amplitude == 0.0:
        return None
    return cf.hyperbolic_disk_of(complex(b.cx, b.cy), b.radius)


def as_chart_ray(model: SurfaceModel, base) -> ChartRay:
    if isinstance(base, ChartRay):
        return base
    mode, end, s = initial_state(model, base)
    if mode == fc.COLLAR:
        s[:4] = fc.to_interior(model.params, end, s[:4])
    return ChartRay((float(s[0]), float(s[1])), float(s[2]))


def _state_ray(model, mode, end, s):
    q = s[:4].copy()
    if mode == fc.COLLAR:
        q = fc.to_interior(model.params, end, q)
    return complex(q[0], q[1]), float(q[2])


# -- the kappa map -----------------------------------------------------------

class DeviationEngine:
    """Evaluates f for a fixed metric pair, caching g2 geodesics by endpoints."""

    def __init__(self, g1: SurfaceModel, g2: SurfaceModel, numeric: bool = False,
                 tol: float = 1e-10):
        for g in (g1, g2):
            if not g.is_disk_family:
                raise NotImplementedError("deviation angles need disk-family models")
        self.g1, self.g2 = g1, g2
        self.hull1, self.hull2 = _hull(g1), _hull(g2)
        self.numeric = numeric
        self.tol = tol
        self._traj = {}

    def clear_cache(self):
        self._traj.clear()

    # g1 side
    def g1_endpoints(self, z, psi):
        """Boundary endpoints (backward, forward) of g1 rays, as unit complex numbers."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        psi = np.broadcast_to(np.asarray(psi, dtype=float), z.shape)
        a, b = _ray_endpoints(z, psi)
        if self.hull1 is not None:
            bad = ~_clears(a, b, self.hull1)
            for i in np.flatnonzero(bad):
                rec = exit_data(self.g1, ChartRay((z[i].real, z[i].imag), float(psi[i])), 0.0)
                a[i] = np.exp(1j * rec.b_minus.y)
                b[i] = np.exp(1j * rec.b_plus.y)
        return a, b

    # g2 side
    def _closed(self, a, b):
        if self.numeric:
            return False
        if self.hull2 is None:
            return True
        return cf.geodesic_clears_disk(a, b, self.hull2[0], self.hull2[1], 1e-9)

    def g2_trajectory(self, a: complex, b: complex, correction: float = 0.0):
        """Recorded g2 geodesic a -> b.  ``correction`` is added to the disk
        momentum to form the shooting guess."""
        key = (a, b)
        traj = self._traj.get(key)
        if traj is None:
            pa, pb = math.atan2(a.imag, a.real), math.atan2(b.imag, b.real)
            eta = 1.0 / math.tan(0.5 * ((pb - pa) % (2.0 * math.pi)))
            if self._closed(a, b):
                z = PhasePoint(0.0, pa, 1.0, eta)
                traj = flow(self.g2, z, "b_time", math.inf, record=True,
                            atol=self.tol, rtol=self.tol)
            else:
                _, traj = connect(self.g2, GeodesicSpec(pa, pb), atol=self.tol, rtol=self.tol,
                                  guess=eta + correction)
            if len(self._traj) > 4096:
                self._traj.clear()
            self._traj[key] = traj
        return traj

    def _numeric_chord(self, traj, c, d):
        found, x, y, vx, vy, row, sig = fc.chord_crossing(
            self.g2.params, traj.records, c.real, c.imag, d.real, d.imag)
        if not found:
            raise NoIntersection("the g2 geodesics do not meet")
        p = complex(x, y)
        return p, complex(vx, vy), cf.disk_tangent(p, d)

    def cross(self, a, b, c, d, correction: float = 0.0):
        """(image point, oriented angle, heading of a->b there) for g2 geodesics."""
        closed_ab, closed_cd = self._closed(a, b), self._closed(c, d)
        if closed_ab and closed_cd:
            p, ang, ok = klein_crossing(np.asarray([a]), np.asarray([b]),
                                        np.asarray([c]), np.asarray([d]))
            if not ok[0]:
                raise NoIntersection("the g2 geodesics do not meet")
            heading = float(np.angle(_tangent(p, np.asarray([b])))[0])
            return complex(p[0]), float(ang[0]), heading
        if closed_cd:
            p, t1, _ = self._numeric_chord(self.g2_trajectory(a, b), c, d)
            t2 = cf.disk_tangent(p, d)
        elif closed_ab:
            p, t2, _ = self._numeric_chord(self.g2_trajectory(c, d, correction), a, b)
            t1 = cf.disk_tangent(p, b)
        else:
            ta = self.g2_trajectory(a, b)
            tb = self.g2_trajectory(c, d, correction)
            cr = crossing(self.g2, ta, tb)
            row, sig = cr.where_a
            _, _, vx, vy = fc._rec_point(self.g2.params, ta.records, row, sig,
                                         np.empty((7, fc.NSTATE)), False)
            return complex(*cr.point), cr.oriented, math.atan2(vy, vx)
        return p, cmath.phase(t2 / t1), cmath.phase(t1)

    def sample(self, base, theta: float) -> DeviationSample:
        ray = as_chart_ray(self.g1, base)
        z = complex(*ray.point)
        (a,), (b,) = self.g1_endpoints(z, ray.heading)
        (c,), (d,) = self.g1_endpoints(z, ray.heading + theta)
        p, f, heading = self.cross(complex(a), complex(b), complex(c), complex(d))
        return DeviationSample(ray, theta, (p.real, p.imag), heading, f)

    def f_matrix(self, z, psi, thetas) -> np.ndarray:
        """f for every (ray, theta) pair; closed form where both g2 chords clear the bump."""
        z = np.asarray(z, dtype=complex)
        psi = np.asarray(psi, dtype=float)
        a, b = self.g1_endpoints(z, psi)
        base_ok = _clears(a, b, self.hull2) & (not self.numeric)
        # shooting guesses for the rotated geodesics follow the previous angle
        corr = np.zeros(z.size)
        out = np.empty((z.size, len(thetas)))
        for j, th in enumerate(thetas):
            c, d = self.g1_endpoints(z, psi + th)
            _, ang, ok = klein_crossing(a, b, c, d)
            fast = base_ok & _clears(c, d, self.hull2) & ok
            out[:, j] = ang
            for i in np.flatnonzero(~fast):
                ci, di = complex(c[i]), complex(d[i])
                _, out[i, j], _ = self.cross(complex(a[i]), complex(b[i]), ci, di, corr[i])
                if not self._closed(ci, di):
                    corr[i] = self._traj[(ci, di)].start[2][3] - \
                        1.0 / math.tan(0.5 * (cmath.phase(di / ci) % (2.0 * math.pi)))
        return out


def deviation_angle(g1: SurfaceModel, g2: SurfaceModel, base, theta: float,
                    numeric: bool = False) -> DeviationSample:
    """One evaluation of the kappa map at (base, theta)."""
    if not 0.0 < theta < math.pi:
        raise BadParams("theta must lie in (0, pi)")
    return DeviationEngine(g1, g2, numeric).sample(base, theta)


# -- Gauss-Bonnet ------------------------------------------------------------

def _arc_points(model: SurfaceModel, traj, tau_a: float, tau_b: float, n: int) -> np.ndarray:
    """n+1 chart points along traj between b-times tau_a and tau_b."""
    lo, hi = min(tau_a, tau_b), max(tau_a, tau_b)
    rec = traj.records
    i0 = max(int(np.searchsorted(rec[:, 0], lo, side="right")) - 1, 0)
    start = rec[i0, 0]
    grid = np.linspace(lo, hi, n + 1)
    out = run_kernel(model, int(rec[i0, 12]), int(rec[i0, 13]), rec[i0, 1:12].copy(),
                     physical=traj.clock == "physical", duration=hi - start,
                     stop_boundary=False, t_eval=grid - start, record=False)
    rows = out[1]
    pts = np.empty((n + 1, 2))
    for k, t in enumerate(grid - start):
        r = rows[int(np.argmin(np.abs(rows[:, 0] - t)))]
        x, y, _, _ = fc.chart_point(model.params, int(r[12]), int(r[13]), r[1:12])
        pts[k] = (x, y)
    return pts if tau_a <= tau_b else pts[::-1]


def _fan_integral(prm, poly: np.ndarray, m: int) -> float:
    """Integral of the curvature density over a star-shaped polygon."""
    c = poly.mean(axis=0)
    r, wr = np.polynomial.legendre.leggauss(m)
    r = 0.5 * (r + 1.0)
    wr = 0.5 * wr
    rr, ss = np.meshgrid(r, r, indexing="ij")
    ww = np.outer(wr, wr) * rr
    p = poly
    q = np.roll(poly, -1, axis=0)
    total = 0.0
    for i in range(len(p)):
        e1 = p[i] - c
        e2 = q[i] - p[i]
        det = e1[0] * (q[i][1] - c[1]) - e1[1] * (q[i][0] - c[0])
        xs = c[0] + rr * e1[0] + rr * ss * e2[0]
        ys = c[1] + rr * e1[1] + rr * ss * e2[1]
        vals = fc.curvature_density(prm, xs.ravel(), ys.ravel()).reshape(xs.shape)
        total += det * float(np.sum(ww * vals))
    # fan determinants carry the orientation of the boundary walk
    x, y = poly[:, 0], poly[:, 1]
    signed_area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    return total if signed_area >= 0.0 else -total


def gauss_bonnet_defect(g2: SurfaceModel, triangle, tol: float = 1e-5):
    """(pi - sum of interior angles, integral of curvature) for a g2 geodesic triangle.

    ``triangle`` holds three pairwise crossing trajectories.
    """
    if not g2.is_disk_family and g2.kind != "half_plane":
        raise NotImplementedError("triangles need a conformal chart")
    t = list(triangle)
    if len(t) != 3:
        raise DegenerateTriangle("a triangle needs three geodesics")
    pos = {}
    angle = {}
    try:
        for i, j in ((0, 1), (1, 2), (0, 2)):
            cr = crossing(g2, t[i], t[j])
            pos[(i, j)] = t[i].records[cr.where_a[0], 0] + cr.where_a[1]
            pos[(j, i)] = t[j].records[cr.where_b[0], 0] + cr.where_b[1]
            angle[(i, j)] = angle[(j, i)] = cr.angle
    except NoIntersection as exc:
        raise DegenerateTriangle("the geodesics do not pairwise cross") from exc
    interior = 0.0
    for i, j, k in ((0, 1, 2), (1, 2, 0), (0, 2, 1)):
        si = np.sign(pos[(i, k)] - pos[(i, j)])
        sj = np.sign(pos[(j, k)] - pos[(j, i)])
        if si == 0 or sj == 0:
            return 0.0, 0.0
        interior += angle[(i, j)] if si * sj > 0 else math.pi - angle[(i, j)]
    defect = math.pi - interior
    sides = [(1, (1, 0), (1, 2)), (2, (2, 1), (2, 0)), (0, (0, 2), (0, 1))]
    spans = [abs(pos[b] - pos[a]) for _, a, b in sides]
    if max(spans) < 1e-13:
        return defect, 0.0
    prev = None
    n, m = 16, 8
    integral = 0.0
    while n <= 1024:
        poly = np.vstack([_arc_points(g2, t[g], pos[a], pos[b], n)[:-1] for g, a, b in sides])
        coarse = _fan_integral(g2.params, poly[::2], m)
        fine = _fan_integral(g2.params, poly, m)
        integral = (4.0 * fine - coarse) / 3.0
        if prev is not None and abs(integral - prev) < 0.1 * tol:
            break
        prev = integral
        n *= 2
        m += 4
    return defect, integral


def triangle_for(engine: DeviationEngine, base, theta1: float, theta2: float):
    """The three g2 geodesics behind a superadditivity comparison."""
    ray = as_chart_ray(engine.g1, base)
    z = complex(*ray.point)
    geos = []
    for th in (0.0, theta1, theta1 + theta2):
        (a,), (b,) = engine.g1_endpoints(z, ray.heading + th)
        geos.append(engine.g2_trajectory(complex(a), complex(b)))
    return geos


def superadditivity_defect(engine: DeviationEngine, base, theta1: float, theta2: float) -> float:
    """f(theta1 + theta2) - f(theta1) - f(R_theta1 xi, theta2)."""
    ray = as_chart_ray(engine.g1, base)
    rotated = ChartRay(ray.point, ray.heading + theta1)
    return (engine.sample(ray, theta1 + theta2).f - engine.sample(ray, theta1).f
            - engine.sample(rotated, theta2).f)


# -- Theta profile -----------------------------------------------------------

@dataclass
class ThetaProfile:
    eps: float
    thetas: np.ndarray
    values: np.ndarray
    mc_err: np.ndarray
    n_samples: int
    rejected: int = 0
    weights: np.ndarray = field(default=None, repr=False)
    f: np.ndarray = field(default=None, repr=False)

    def combination(self, coeffs, const: float = 0.0):
        """Value and samplewise standard error of const + sum_i c_i Theta(theta_i)."""
        coeffs = np.asarray(coeffs, dtype=float)
        if self.f is None:
            val = const + float(coeffs @ self.values)
            return val, float(np.sqrt(np.sum((coeffs * self.mc_err) ** 2)))
        mean, se = ratio_mean(self.weights, self.f @ coeffs)
        return const + mean, se

    def _unit(self, *pairs):
        c = np.zeros(len(self.thetas))
        for i, w in pairs:
            c[i] += w
        return c

    def endpoint_checks(self):
        """Quadratic extrapolations to 0 and pi, with their residuals and errors."""
        n = len(self.thetas)
        lo, lo_se = self.combination(self._unit((0, 3.0), (1, -3.0), (2, 1.0)))
        hi, hi_se = self.combination(self._unit((n - 1, 3.0), (n - 2, -3.0), (n - 3, 1.0)))
        return {"theta0": (lo, lo_se), "thetapi": (hi - math.pi, hi_se)}

    def pi_symmetry(self):
        n = len(self.thetas)
        return [self.combination(self._unit((i, 1.0), (n - 1 - i, 1.0)), -math.pi)
                for i in range(n)]

    def superadditivity(self):
        """(i, j, Theta_i + Theta_j - Theta_{i+j}, se) for grid pairs."""
        n = len(self.thetas)
        out = []
        for i in range(n):
            for j in range(i, n):
                k = i + j + 1
                if k >= n:
                    break
                v, se = self.combination(self._unit((i, 1.0), (j, 1.0), (k, -1.0)))
                out.append((i, j, v, se))
        return out

    def monotone_violation(self):
        worst = 0.0
        for i in range(len(self.thetas) - 1):
            v, se = self.combination(self._unit((i, 1.0), (i + 1, -1.0)))
            worst = max(worst, v - 2.0 * se)
        return worst

    def to_csv(self) -> str:
        lines = [PROFILE_CSV_HEADER]
        for th, v, e in zip(self.thetas, self.values, self.mc_err):
            lines.append(f"{float(self.eps)!r},{float(th)!r},{float(v)!r},{float(e)!r},{self.n_samples}")
        return "\n".join(lines) + "\n"


def theta_grid(n_theta: int) -> np.ndarray:
    return np.arange(1, n_theta + 1) * math.pi / (n_theta + 1)


def santalo_rays(g1: SurfaceModel, eps: float, rng, size: int):
    """Liouville-uniform unit vectors of {rho >= eps} through the Santalo factorization.

    Returns (points, headings, chord weights, rejected count).
    """
    r = cf.disk_circle_radius(eps)
    beta_u, omega, frac = santalo_draw(rng, size)
    keep = np.minimum(omega, np.pi - omega) >= eps * eps
    rejected = int(size - keep.sum())
    beta = 2.0 * np.pi * beta_u[keep]
    omega = omega[keep]
    frac = frac[keep]
    xb = r * np.exp(1j * beta)
    psi0 = beta + 0.5 * np.pi + omega
    length = cf.disk_chord_length(eps, omega)
    pts, heads = cf.disk_point_along(xb, psi0, frac * length)
    hull = _hull(g1)
    if hull is not None:
        a, b = _ray_endpoints(xb, psi0)
        for i in np.flatnonzero(~_clears(a, b, hull)):
            ray = ChartRay((xb[i].real, xb[i].imag), float(psi0[i]))
            rec = exit_data(g1, ray, eps)
            length[i] = rec.l_plus
            tr = flow(g1, ray, "physical", float(frac[i] * rec.l_plus), record=False)
            row = tr.records[-1]
            pts[i], heads[i] = _state_ray(g1, int(row[12]), int(row[13]), row[1:12])
    return pts, heads, length, rejected


def theta_profile(g1: SurfaceModel, g2: SurfaceModel, eps: float, n_theta: int = 16,
                  n_samples: int = 100_000, seed: int = 0, numeric: bool = False,
                  tol: float = MC_TOL) -> ThetaProfile:
    """Liouville average of f over {rho >= eps} on a uniform theta grid."""
    if not 0.005 <= eps <= 0.1:
        raise BadParams("eps must lie in [0.005, 0.1]")
    if n_theta < 3:
        raise BadParams("n_theta must be at least 3")
    thetas = theta_grid(n_theta)

    def worker(rng, size):
        engine = DeviationEngine(g1, g2, numeric, tol)
        pts, heads, w, rej = santalo_rays(g1, eps, rng, size)
        return w, engine.f_matrix(pts, heads, thetas), rej

    parts = run_chunks(worker, n_samples, seed, CHUNK)
    weights = np.concatenate([p[0] for p in parts])
    fmat = np.vstack([p[1] for p in parts])
    rejected = sum(p[2] for p in parts)
    if rejected > 0.2 * n_samples:
        raise InsufficientSamples(f"{rejected} of {n_samples} rays rejected")
    values = np.empty(n_theta)
    errs = np.empty(n_theta)
    for i in range(n_theta):
        values[i], errs[i] = ratio_mean(weights, fmat[:, i])
    return ThetaProfile(eps, thetas, values, errs, len(weights), rejected, weights, fmat)


def identity_profile(n_theta: int = 16, eps: float = 0.02) -> ThetaProfile:
    th = theta_grid(n_theta)
    return ThetaProfile(eps, th, th.copy(), np.zeros(n_theta), 0)


# -- Jensen ------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexTestFn:
    """``abs_hinge``: scale |x - c|; ``hinge``: scale max(c - x, 0);
    ``linear``: scale x; ``custom_grid``: piecewise linear through ``grid``
    values on a uniform grid of [0, pi]."""

    kind: str
    scale: float = 1.0
    c: float = math.pi / 2
    grid: tuple = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "abs_hinge":
            return self.scale * np.abs(x - self.c)
        if self.kind == "hinge":
            return self.scale * np.maximum(self.c - x, 0.0)
        if self.kind == "linear":
            return self.scale * x
        if self.kind == "custom_grid":
            g = np.asarray(self.grid, dtype=float)
            return np.interp(x, np.linspace(0.0, math.pi, len(g)), g)
        raise BadParams(f"unknown test function {self.kind!r}")

    def derivative(self, x):
        h = 1e-7
        return (self(x + h) - self(x - h)) / (2.0 * h)

    def check_convex(self, n: int = 1024):
        x = np.linspace(0.0, math.pi, n)
        v = self(x)
        second = v[2:] - 2.0 * v[1:-1] + v[:-2]
        scale = max(float(np.max(np.abs(v))), 1.0)
        if np.any(second < -1e-12 * scale):
            raise NonConvexJ(f"{self.kind} is not convex on [0, pi]")


def isotonic_repair(values) -> np.ndarray:
    return np.asarray(isotonic_regression(np.asarray(values, dtype=float)).x)


JENSEN_FINE = 4097


def jensen_check(profile: ThetaProfile, J: ConvexTestFn):
    """(lhs, rhs, slack, slack standard error) of the Jensen inequality."""
    J.check_convex()
    nodes = np.concatenate([[0.0], profile.thetas, [math.pi]])
    repaired = np.concatenate([[0.0], isotonic_repair(profile.values), [math.pi]])
    fine = np.linspace(0.0, math.pi, JENSEN_FINE)
    wq = np.full(JENSEN_FINE, fine[1] - fine[0])
    wq[0] = wq[-1] = 0.5 * (fine[1] - fine[0])
    sin = np.sin(fine)
    theta_fine = np.interp(fine, nodes, repaired)
    lhs = float(np.sum(wq * J(theta_fine) * sin))
    rhs = float(np.sum(wq * J(fine) * sin))
    # delta-method error: d lhs / d Theta_i through the interpolation hats
    jp = J.derivative(theta_fine) * sin * wq
    grad = np.empty(len(profile.thetas))
    for i in range(len(profile.thetas)):
        hat = np.interp(fine, nodes, np.eye(len(nodes))[i + 1])
        grad[i] = float(np.sum(jp * hat))
    _, se = profile.combination(grad)
    return lhs, rhs, rhs - lhs, se


# -- Otal analysis -----------------------------------------------------------

@dataclass(frozen=True)
class OtalParams:
    alpha: float
    beta: float
    beta_prime: float
    delta_hold: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise BadParams("beta must be positive")

    @property
    def gamma_hat(self) -> float:
        b = self.beta
        return (1.0 + self.alpha - 2.0 * self.beta_prime / b) / (1.0 + 2.0 / b)


def _level_interval(th, dev, centre: int, level: float):
    """Largest interval around ``centre`` on which dev < -level (linear crossings)."""
    i = centre
    while i > 0 and dev[i - 1] < -level:
        i -= 1
    j = centre
    while j < len(th) - 1 and dev[j + 1] < -level:
        j += 1

    def cross(k0, k1):
        d0, d1 = dev[k0] + level, dev[k1] + level
        return th[k0] + (th[k1] - th[k0]) * d0 / (d0 - d1) if d0 != d1 else th[k0]

    left = cross(i - 1, i) if i > 0 else th[0]
    right = cross(j, j + 1) if j < len(th) - 1 else th[-1]
    return float(left), float(right)


def otal_analyze(profile: ThetaProfile, params: OtalParams, threshold: float | None = None) -> dict:
    """Hypothesis residuals, Hoelder fit and critical exponent for a profile."""
    th = np.concatenate([[0.0], profile.thetas, [math.pi]])
    vals = np.concatenate([[0.0], profile.values, [math.pi]])
    dev = vals - th
    sup_dev = float(np.max(np.abs(profile.values - profile.thetas)))
    ends = profile.endpoint_checks()
    sym = profile.pi_symmetry()
    sup = profile.superadditivity()
    report = {
        "gamma_hat": params.gamma_hat,
        "sup_dev": sup_dev,
        "endpoint_residual_0": ends["theta0"][0],
        "endpoint_residual_pi": ends["thetapi"][0],
        "pi_symmetry_residual": float(max((abs(v) for v, _ in sym), default=0.0)),
        "superadditivity_violation": float(max((v for _, _, v, _ in sup), default=0.0)),
        "monotone_violation": profile.monotone_violation(),
    }
    # Hoelder fit of the oscillation of Theta - Id against the separation
    seps, osc = [], []
    for k in range(1, len(th) - 1):
        m = float(np.max(np.abs(dev[k:] - dev[:-k])))
        seps.append(th[k] - th[0])
        osc.append(m)
    seps, osc = np.asarray(seps), np.asarray(osc)
    pos = osc > 1e-14
    if pos.sum() >= 2:
        beta_fit, lnk = np.polyfit(np.log(seps[pos]), np.log(osc[pos]), 1)
        report["holder_beta"] = float(beta_fit)
        report["holder_K"] = float(math.exp(lnk))
    else:
        report["holder_beta"] = math.inf
        report["holder_K"] = 0.0
    lam = threshold if threshold is not None else profile.eps ** params.gamma_hat
    report["threshold"] = lam
    if sup_dev > lam:
        # by pi-symmetry an excess at theta is a deficit at pi - theta
        worst = int(np.argmin(dev))
        if -dev[worst] < np.max(dev):
            dev = -dev[::-1]
            worst = int(np.argmin(dev))
        depth = -float(dev[worst])
        c = _level_interval(th, dev, worst, 0.0)
        b = _level_interval(th, dev, worst, lam)
        a = _level_interval(th, dev, worst, 0.5 * depth)
        report["intervals"] = {"c": c[0], "b": b[0], "a": a[0], "A": a[1], "B": b[1], "C": c[1]}
    else:
        report["intervals"] = None
    return report
