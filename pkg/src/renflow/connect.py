"""Boundary-to-boundary geodesics by shooting, and geodesic intersections."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _flowcore as fc
from .errors import BadParams, NoBracket, NoIntersection, Tangential
from .geoflow import ATOL, RTOL, TAU_MAX, PhasePoint, Trajectory, flow
from .surface_models import SurfaceModel

Y_TOL = 1e-11
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GeodesicSpec:
    """Endpoints p -> q on the boundary.

    ``winding`` counts extra turns of the lifted boundary coordinate on the
    cylinder; ``p_end`` / ``q_end`` pick its boundary circles (default: from
    end -1 to end +1).  Other models have a single boundary component.
    """

    p: float
    q: float
    winding: int = 0
    model_id: str = ""
    p_end: int | None = None
    q_end: int | None = None

    def ends(self, model: SurfaceModel) -> tuple[int, int]:
        if model.kind == "cylinder":
            return (self.p_end if self.p_end is not None else -1,
                    self.q_end if self.q_end is not None else 1)
        return 1, 1

    def swapped(self) -> "GeodesicSpec":
        return GeodesicSpec(self.q, self.p, -self.winding, self.model_id, self.q_end, self.p_end)


def _target(model: SurfaceModel, spec: GeodesicSpec):
    """(target, period_mod, initial guess) for the shooting residual."""
    p, q = float(spec.p), float(spec.q)
    if model.is_disk_family:
        delta = (q - p) % TWO_PI
        if delta < 1e-14 or TWO_PI - delta < 1e-14:
            raise BadParams("endpoints coincide")
        return delta, TWO_PI, 1.0 / math.tan(0.5 * delta)
    if model.kind == "half_plane":
        if q == p:
            raise BadParams("endpoints coincide")
        return q, 0.0, 2.0 / (q - p)
    ell = model.neck_length
    p_end, q_end = spec.ends(model)
    target = q + spec.winding
    delta = target - p
    if p_end != q_end:
        guess = -p_end * ell * math.tanh(0.5 * ell * delta)
    else:
        if delta == 0.0:
            raise BadParams("endpoints coincide")
        guess = p_end * ell / math.tanh(0.5 * ell * delta)
    return target, 0.0, guess


def shoot_exit(model: SurfaceModel, p: float, eta0: float, end: int = 1, *,
               atol: float = ATOL, rtol: float = RTOL, cutoff: float = TAU_MAX):
    """(status, lifted exit coordinate, d exit / d eta0, exit end)."""
    return fc.shoot(model.params, float(p), int(end), float(eta0), atol, rtol, cutoff)


def connect_momentum(model: SurfaceModel, spec: GeodesicSpec, *, atol: float = ATOL,
                     rtol: float = RTOL, cutoff: float = TAU_MAX, guess: float | None = None,
                     ytol: float = Y_TOL) -> float:
    """Incoming tangential momentum of the geodesic described by ``spec``."""
    target, period_mod, eta_guess = _target(model, spec)
    if guess is not None:
        eta_guess = guess
    p_end, q_end = spec.ends(model)
    status, eta, _ = fc.connect_eta(model.params, float(spec.p), p_end, target, q_end,
                                    period_mod, eta_guess, atol, rtol, cutoff, ytol)
    if status != 0:
        raise NoBracket(f"could not bracket the endpoint for {spec}")
    return float(eta)


def connect(model: SurfaceModel, spec: GeodesicSpec, *, atol: float = ATOL, rtol: float = RTOL,
            cutoff: float = TAU_MAX, eps_events=(), guess: float | None = None,
            ytol: float = Y_TOL):
    """Incoming boundary point and b-time trajectory of the geodesic p -> q."""
    eta = connect_momentum(model, spec, atol=atol, rtol=rtol, cutoff=cutoff, guess=guess,
                           ytol=ytol)
    p_end, _ = spec.ends(model)
    z = PhasePoint(0.0, float(spec.p), 1.0, eta, p_end)
    traj = flow(model, z, "b_time", math.inf, eps_events, record=True, cutoff=cutoff,
                atol=atol, rtol=rtol)
    return z, traj


@dataclass(frozen=True)
class Crossing:
    point: tuple
    angle: float
    oriented: float
    where_a: tuple
    where_b: tuple
    shift: float


def _theta_range(traj: Trajectory):
    y = traj.records[:, 2]
    return float(np.min(y)), float(np.max(y))


def crossing(model: SurfaceModel, traj_a: Trajectory, traj_b: Trajectory) -> Crossing:
    """Intersection point with the oriented angle from a's tangent to b's."""
    prm = model.params
    shifts = [0.0]
    if model.kind == "cylinder":
        lo_a, hi_a = _theta_range(traj_a)
        lo_b, hi_b = _theta_range(traj_b)
        kmin = math.floor(lo_a - hi_b) - 1
        kmax = math.ceil(hi_a - lo_b) + 1
        shifts = sorted((float(k) for k in range(kmin, kmax + 1)), key=abs)
    best = None
    for shift in shifts:
        out = fc.intersect_records(prm, traj_a.records, traj_b.records, shift,
                                   traj_a.clock == "physical", traj_b.clock == "physical")
        found, x, y, ang, ia, sa, ib, sb, dist = out
        if found and dist <= 1e-6:
            best = (x, y, ang, ia, sa, ib, sb, shift)
            break
    if best is None:
        raise NoIntersection("the geodesics do not meet")
    x, y, ang, ia, sa, ib, sb, shift = best
    un = abs(ang)
    if un < 1e-6 or un > math.pi - 1e-6:
        raise Tangential(f"intersection angle {un:.3g} is degenerate")
    point = model.from_internal((x, y))
    return Crossing(point, un, float(ang), (int(ia), float(sa)), (int(ib), float(sb)), shift)


def intersect(model: SurfaceModel, traj_a: Trajectory, traj_b: Trajectory):
    """Common point and unsigned angle in (0, pi) of two crossing geodesics."""
    c = crossing(model, traj_a, traj_b)
    return c.point, c.angle
