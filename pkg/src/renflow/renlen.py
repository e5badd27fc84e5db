"""Renormalized lengths, the extended distance and their transformation laws."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import closed_forms as cf
from .connect import GeodesicSpec, connect_momentum
from .errors import BadParams, DegenerateImage, Trapped
from .geoflow import ATOL, RTOL, TAU_MAX, PhasePoint, flow, inside_length
from .surface_models import BdfShift, SurfaceModel, make_model


@dataclass
class RenLenEstimate:
    eps_ladder: list
    L_eps: list
    L: float
    err: float
    spec: GeodesicSpec
    stages: list = field(default_factory=list, repr=False)

    def csv_row(self, model: SurfaceModel, eps0: float, levels: int) -> str:
        s = self.spec
        return (f"{model.kind},{float(s.p)!r},{float(s.q)!r},{s.winding},{float(self.L)!r},"
                f"{float(self.err)!r},{float(eps0)!r},{levels}")


CSV_HEADER = "model,p,q,winding,L,err,eps0,levels"


@dataclass(frozen=True)
class RenDistance:
    p: tuple
    q: tuple
    D: float


def richardson(values) -> tuple[float, float, list]:
    """Extrapolate a ladder with halving steps, assuming errors c1 e + c2 e^2.

    Returns (limit, increment-based error, stages).
    """
    vals = np.asarray(values, dtype=float)
    r1 = 2.0 * vals[1:] - vals[:-1]
    stages = [vals, r1]
    if len(vals) >= 4:
        r2 = (4.0 * r1[1:] - r1[:-1]) / 3.0
        stages.append(r2)
        best, prev = r2[-1], r2[-2] if len(r2) > 1 else r1[-1]
    else:
        best = r1[-1]
        prev = r1[-2] if len(r1) > 1 else vals[-1]
    return float(best), float(abs(best - prev)), stages


def truncated_lengths(model: SurfaceModel, p: float, eta0: float, end: int, ladder, *,
                      atol=ATOL, rtol=RTOL, cutoff=TAU_MAX):
    """Lengths inside {rho_hat >= eps} for every eps of the ladder, one pass."""
    z = PhasePoint(0.0, float(p), 1.0, float(eta0), end)
    traj = flow(model, z, "b_time", math.inf, list(ladder), record=False, cutoff=cutoff,
                atol=atol, rtol=rtol)
    if traj.trapped:
        raise Trapped("forward")
    return [inside_length(traj, e) for e in ladder]


def renormalized_length(model: SurfaceModel, spec: GeodesicSpec, eps0: float = 0.02,
                        levels: int = 5, *, atol=ATOL, rtol=RTOL, eta0: float | None = None) -> RenLenEstimate:
    """Finite part of the length of the geodesic p -> q, from an eps ladder."""
    if not 0.0 < eps0 <= 0.05:
        raise BadParams("eps0 must lie in (0, 0.05]")
    if levels < 1:
        raise BadParams("levels must be positive")
    if eta0 is None:
        eta0 = connect_momentum(model, spec, atol=atol, rtol=rtol)
    ladder = [eps0 * 2.0 ** -k for k in range(levels)]
    p_end, _ = spec.ends(model)
    lengths = truncated_lengths(model, spec.p, eta0, p_end, ladder, atol=atol, rtol=rtol)
    if min(lengths) <= 0.0:
        raise BadParams("the geodesic never enters {rho >= eps0}; lower eps0")
    L_eps = [l + 2.0 * math.log(e) for l, e in zip(lengths, ladder)]
    if levels == 1:
        return RenLenEstimate(ladder, L_eps, L_eps[0], math.inf, spec)
    L, err, stages = richardson(L_eps)
    err = max(err, abs(L_eps[-1] - L) / 4.0)
    return RenLenEstimate(ladder, L_eps, L, err, spec, stages)


def _is_boundary(model: SurfaceModel, pt) -> bool:
    if model.kind == "cylinder":
        return math.isinf(pt[0])
    if model.kind == "half_plane":
        return pt[1] == 0.0
    return abs(complex(pt[0], pt[1])) >= 1.0


def extended_distance(model: SurfaceModel, p, q, *, eps0: float = 0.01, levels: int = 5) -> RenDistance:
    """D(p, q) = d(p, q) + ln rho(p) + ln rho(q), extended to boundary points.

    Points are public chart points; boundary points are ``|z| = 1`` (disk),
    ``y = 0`` (half-plane) or ``t = +-inf`` (cylinder, theta lifted).
    """
    p = (float(p[0]), float(p[1]))
    q = (float(q[0]), float(q[1]))
    if p == q:
        raise BadParams("points must differ")
    if model.kind == "disk":
        D = cf.disk_extended_distance(complex(*p), complex(*q))
    elif model.kind == "half_plane":
        D = cf.half_plane_extended_distance(p, q)
    elif model.kind == "cylinder":
        D = cf.cylinder_extended_distance(model.neck_length, p, q)
    else:
        if not (_is_boundary(model, p) and _is_boundary(model, q)):
            raise NotImplementedError("interior points on the perturbed disk")
        spec = GeodesicSpec(math.atan2(p[1], p[0]), math.atan2(q[1], q[0]))
        D = renormalized_length(model, spec, eps0, levels).L
    return RenDistance(p, q, D)


def conformal_shift_check(model: SurfaceModel, spec: GeodesicSpec, omega, eps0: float = 0.02,
                          levels: int = 5):
    """Measured change of L under rho -> e^omega rho, and omega(p) + omega(q)."""
    if isinstance(omega, str):
        omega = BdfShift.parse(omega)
    base = model.with_shift(BdfShift())
    shifted = model.with_shift(omega)
    eta0 = connect_momentum(base, spec)
    L0 = renormalized_length(base, spec, eps0, levels, eta0=eta0).L
    L1 = renormalized_length(shifted, spec, eps0, levels, eta0=eta0).L
    predicted = shifted.omega(spec.p) + shifted.omega(spec.q)
    return L1 - L0, predicted


def mobius_check(c: float, theta_rot: float, xi: float, zeta: float, eps0: float = 0.02,
                 levels: int = 5):
    """Change of L under z -> e^{i theta}(z + c)/(c z + 1) on the disk."""
    if not -1.0 < c < 1.0:
        raise BadParams("c must lie in (-1, 1)")
    disk = make_model("disk")
    a, b = cmath.exp(1j * xi), cmath.exp(1j * zeta)
    ga, gb = cf.disk_mobius(c, theta_rot, a), cf.disk_mobius(c, theta_rot, b)
    if abs(ga - gb) < 1e-12:
        raise DegenerateImage("image endpoints coincide")
    before = renormalized_length(disk, GeodesicSpec(xi, zeta), eps0, levels).L
    after = renormalized_length(disk, GeodesicSpec(cmath.phase(ga), cmath.phase(gb)), eps0, levels).L
    predicted = math.log(cf.disk_mobius_derivative_modulus(c, a)) + \
        math.log(cf.disk_mobius_derivative_modulus(c, b))
    return after - before, predicted
