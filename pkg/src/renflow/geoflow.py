"""Geodesic flow, its boundary-rescaled version, exit data and Jacobi fields.

Two clocks are available.  ``physical`` is arclength ``t``.  ``b_time`` is
the rescaled time ``tau`` with ``dt/dtau = 1/rho``; its vector field stays
smooth at ``rho = 0``, so b-time runs may start and end on the boundary.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import _flowcore as fc
from .errors import BadParams, BoundaryPoint, LeftChart, StepSizeUnderflow, Trapped
from .surface_models import SurfaceModel

ATOL = 1e-10
RTOL = 1e-10
TAU_MAX = 50.0
T_MAX = 200.0
MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class PhasePoint:
    """Unit covector in b-coordinates.

    ``xibar0`` is the cosine of the angle between the velocity and
    ``grad rho`` (so it equals ``rho * xi_0`` at the boundary), ``eta`` the
    covector component dual to ``y``.  ``end`` labels the boundary component
    (only the cylinder has two).
    """

    rho: float
    y: float
    xibar0: float
    eta: float
    end: int = 1

    def flipped(self) -> "PhasePoint":
        return PhasePoint(self.rho, self.y, -self.xibar0, -self.eta, self.end)

    @property
    def on_boundary(self) -> bool:
        return self.rho == 0.0


@dataclass(frozen=True)
class ChartRay:
    """Interior start given by a chart point and a heading.

    The heading is the angle of the velocity measured in the chart's
    orthonormal frame (for the cylinder: ``d/dt`` then ``d/dtheta``).
    """

    point: tuple
    heading: float

    def flipped(self) -> "ChartRay":
        return ChartRay(self.point, self.heading + math.pi)


@dataclass(frozen=True)
class Event:
    eps: float
    index: int
    direction: int
    t: float
    tau: float


@dataclass
class Trajectory:
    model: SurfaceModel
    clock: str
    t: np.ndarray
    tau: np.ndarray
    bview: np.ndarray  # columns rho, y, xibar0, eta, end
    events: list
    status: int
    records: np.ndarray = field(repr=False)
    event_rows: np.ndarray = field(repr=False)
    start: tuple = field(repr=False)  # (mode, end, state)
    cutoff: float = TAU_MAX
    max_drift: float = 0.0

    @property
    def samples(self):
        out = []
        for k in range(len(self.t)):
            out.append((float(self.t[k]), float(self.tau[k]), self.point(k)))
        return out

    def point(self, k: int) -> PhasePoint:
        r = self.bview[k]
        return PhasePoint(float(r[0]), _reduce(self.model, float(r[1])), float(r[2]),
                          float(r[3]), int(r[4]))

    @property
    def final(self) -> PhasePoint:
        return self.point(len(self.t) - 1)

    @property
    def trapped(self) -> bool:
        return self.status == fc.CUTOFF

    def chart_positions(self) -> np.ndarray:
        """Public-chart positions of the samples (cylinder lifts theta)."""
        prm = self.model.params
        out = np.empty((len(self.records), 2))
        for i, row in enumerate(self.records):
            x, y, _, _ = fc.chart_point(prm, int(row[12]), int(row[13]), row[1:12])
            out[i] = self.model.from_internal((x, y)) if np.isfinite(x) else (x, y)
        return out

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        buf.write("t,tau,rho,y,xibar0,eta\n")
        for k in range(len(self.t)):
            p = self.point(k)
            buf.write(f"{float(self.t[k])!r},{float(self.tau[k])!r},{float(p.rho)!r},{float(p.y)!r},"
                      f"{float(p.xibar0)!r},{float(p.eta)!r}\n")
        for ev in self.events:
            buf.write(f"# event eps={float(ev.eps)!r} t={float(ev.t)!r}\n")
        text = buf.getvalue()
        if target is not None:
            with open(target, "w") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True)
class ExitRecord:
    tau_plus: float
    tau_minus: float
    b_plus: PhasePoint
    b_minus: PhasePoint
    sigma_point: PhasePoint
    l_plus: float
    l_minus: float


@dataclass(frozen=True)
class JacobiState:
    j: float
    jp: float


def _reduce(model: SurfaceModel, y: float) -> float:
    if model.period:
        return y % model.period
    return y


def initial_state(model: SurfaceModel, start):
    """Kernel state (mode, end, vector) for a PhasePoint or ChartRay start."""
    prm = model.params
    s = np.zeros(fc.NSTATE)
    if isinstance(start, ChartRay):
        x, y = model.to_internal(start.point)
        if model.rho(start.point) <= 0.0:
            raise BoundaryPoint("chart rays must start in the interior")
        q = np.array([x, y, start.heading, 0.0])
        if model.kind == "half_plane":
            col, end = fc.to_collar(prm, q)
            s[:4] = col
            return fc.COLLAR, 1, s
        s[:3] = q[:3]
        end = 1 if (model.kind != "cylinder" or x >= 0.0) else -1
        return fc.INTERIOR, end, s
    p = start
    if p.rho < 0.0:
        raise BadParams("rho must be nonnegative")
    q = np.array([p.rho, p.y, p.xibar0, p.eta])
    if model.kind != "half_plane" and p.rho > prm[fc.P_RHI]:
        if model.is_disk_family and p.rho >= 0.5:
            raise BadParams("the disk centre has no boundary coordinate; use ChartRay")
        s[:4] = fc.to_interior(prm, p.end, q)
        s[3] = 0.0
        return fc.INTERIOR, p.end, s
    s[:4] = q
    return fc.COLLAR, p.end, s


def _raise_status(status: int):
    if status == fc.UNDERFLOW or status == fc.MAXSTEPS:
        raise StepSizeUnderflow("adaptive step size collapsed")
    if status == fc.LEFT_CHART:
        raise LeftChart("trajectory left the truncated chart box")


def run_kernel(model: SurfaceModel, mode: int, end: int, s0: np.ndarray, *, physical: bool,
               duration: float, eps_events=(), stop_boundary: bool = True,
               flags: int = 0, t_eval=None, record: bool = True, cutoff=None,
               atol: float = ATOL, rtol: float = RTOL):
    """Thin wrapper over the compiled integrator; raises on hard failures."""
    eps = np.asarray(eps_events, dtype=float)
    floor = 0.5 * float(eps.min()) if eps.size else 1e-3
    if cutoff is None:
        cutoff = T_MAX if physical else TAU_MAX
    te = np.asarray(t_eval if t_eval is not None else [], dtype=float)
    out = fc.integrate(model.params, mode, end, np.asarray(s0, dtype=float), physical,
                       float(duration), eps, stop_boundary and not physical, floor,
                       eps.size > 0, flags, te, float(cutoff), atol, rtol, 1e-2,
                       record, MAX_STEPS)
    _raise_status(out[0])
    return out


def _trajectory(model, clock, out, eps_events, start, cutoff) -> Trajectory:
    status, rec, ev, s, mode, end, indep, drift, nsteps = out
    if clock == "physical":
        t, tau = rec[:, 0].copy(), rec[:, 5].copy()
    else:
        t, tau = rec[:, 5].copy(), rec[:, 0].copy()
    bview = fc.b_view_rows(model.params, rec)
    events = []
    for row in ev:
        k = int(row[0])
        indep = float(row[1])
        other = float(row[3 + 4])
        tt, ta = (indep, other) if clock == "physical" else (other, indep)
        idx = int(np.searchsorted(rec[:, 0], indep))
        events.append(Event(float(eps_events[k]), idx, int(row[2]), tt, ta))
    return Trajectory(model, clock, t, tau, bview, events, int(status), rec, ev, start,
                      cutoff, float(drift))


def flow(model: SurfaceModel, start, clock: str = "b_time", duration: float = math.inf,
         eps_events=(), *, record: bool = True, t_eval=None, stop_at_boundary: bool = True,
         cutoff: float | None = None, atol: float = ATOL, rtol: float = RTOL,
         jacobi: tuple | None = None) -> Trajectory:
    """Integrate the geodesic flow from ``start`` (PhasePoint or ChartRay).

    ``clock`` is ``"physical"`` or ``"b_time"``.  Crossings of
    ``rho_hat = eps`` are located for every value in ``eps_events``.  In b-time
    the run stops on reaching the boundary unless ``stop_at_boundary`` is off.
    ``jacobi = (j0, j0')`` also transports a normal Jacobi field (physical
    clock only).
    """
    if clock not in ("physical", "b_time"):
        raise BadParams(f"unknown clock {clock!r}")
    physical = clock == "physical"
    mode, end, s0 = initial_state(model, start)
    if physical:
        rho0 = fc.rho_and_y(model.params, mode, s0)[0]
        if rho0 <= 1e-8:
            raise BoundaryPoint("physical-time starts need rho > 1e-8")
    flags = 0
    if jacobi is not None:
        if not physical:
            raise BadParams("Jacobi transport runs in the physical clock")
        s0[9], s0[10] = jacobi
        flags |= fc.JAC
    if cutoff is None:
        cutoff = T_MAX if physical else TAU_MAX
    out = run_kernel(model, mode, end, s0, physical=physical, duration=duration,
                     eps_events=eps_events, stop_boundary=stop_at_boundary, flags=flags,
                     t_eval=t_eval, record=record, cutoff=cutoff, atol=atol, rtol=rtol)
    return _trajectory(model, clock, out, list(eps_events), (mode, end, s0), cutoff)


def inside_length(traj: Trajectory, eps: float) -> float:
    """Length of the part of ``traj`` lying in {rho_hat >= eps}, t >= 0."""
    model = traj.model
    mode, end, s0 = traj.start
    g0 = fc.event_value(model.params, mode, s0, eps)
    inside = g0 >= 0.0
    t_in = 0.0 if inside else None
    total = 0.0
    for ev in traj.events:
        if ev.eps != eps:
            continue
        if ev.direction > 0 and not inside:
            inside, t_in = True, ev.t
        elif ev.direction < 0 and inside:
            total += ev.t - t_in
            inside = False
    if inside:
        total += traj.t[-1] - t_in
    return total


def exit_data(model: SurfaceModel, z, eps: float, *, cutoff: float = TAU_MAX,
              atol: float = ATOL, rtol: float = RTOL) -> ExitRecord:
    """Boundary exits of the ray through ``z`` in both time directions."""
    if eps < 0:
        raise BadParams("eps must be nonnegative")
    events = [eps] if eps > 0 else []
    fwd = flow(model, z, "b_time", math.inf, events, record=False, cutoff=cutoff,
               atol=atol, rtol=rtol)
    on_boundary = isinstance(z, PhasePoint) and z.rho == 0.0 and z.xibar0 > 0.0
    if on_boundary:
        bwd = None
    else:
        bwd = flow(model, z.flipped(), "b_time", math.inf, events, record=False,
                   cutoff=cutoff, atol=atol, rtol=rtol)
    trapped_f = fwd.trapped
    trapped_b = bwd is not None and bwd.trapped
    if trapped_f and trapped_b:
        raise Trapped("both")
    if trapped_f:
        raise Trapped("forward")
    if trapped_b:
        raise Trapped("backward")
    b_plus = fwd.final
    if bwd is None:
        b_minus, tau_minus, l_minus = z, 0.0, 0.0
    else:
        b_minus = bwd.final.flipped()
        tau_minus = -float(bwd.tau[-1])
        l_minus = -inside_length(bwd, eps) if eps > 0 else -math.inf
    l_plus = inside_length(fwd, eps) if eps > 0 else math.inf
    return ExitRecord(float(fwd.tau[-1]), tau_minus, b_plus, b_minus, b_plus,
                      l_plus, l_minus)


def scattering(model: SurfaceModel, z: PhasePoint, *, cutoff: float = TAU_MAX,
               atol: float = ATOL, rtol: float = RTOL) -> PhasePoint:
    """Exit point on the outgoing boundary of an incoming boundary ray."""
    if z.rho != 0.0 or abs(z.xibar0 - 1.0) > 1e-9:
        raise BadParams("scattering needs an incoming boundary point")
    traj = flow(model, z, "b_time", math.inf, record=False, cutoff=cutoff, atol=atol, rtol=rtol)
    if traj.trapped:
        raise Trapped("forward")
    return traj.final


def jacobi_transport(model: SurfaceModel, geodesic: Trajectory, j0: float, j0p: float,
                     *, atol: float = ATOL, rtol: float = RTOL) -> list:
    """Normal Jacobi field along a physical-clock trajectory, at its samples."""
    if geodesic.clock != "physical":
        raise BadParams("Jacobi transport needs a physical-clock trajectory")
    mode, end, s0 = geodesic.start
    s = s0.copy()
    s[9], s[10] = j0, j0p
    times = geodesic.t[1:]
    out = run_kernel(model, mode, end, s, physical=True, duration=float(geodesic.t[-1]),
                     flags=fc.JAC, t_eval=times, record=False, cutoff=geodesic.cutoff,
                     atol=atol, rtol=rtol)
    rec = out[1]
    states = [JacobiState(float(j0), float(j0p))]
    for t in times:
        k = int(np.argmin(np.abs(rec[:, 0] - t)))
        states.append(JacobiState(float(rec[k, 10]), float(rec[k, 11])))
    return states


def jacobi_scalar(kappa, t_end: float, j0: float, j0p: float, *, rtol: float = 1e-12,
                  atol: float = 1e-14, t_eval=None):
    """Solve j'' = -kappa(t) j for a prescribed curvature profile."""
    sol = solve_ivp(lambda t, y: (y[1], -kappa(t) * y[0]), (0.0, t_end), (j0, j0p),
                    method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
    return sol.t, sol.y[0], sol.y[1]


def growth_exponent(model: SurfaceModel, start, t_end: float = 10.0, t_fit: float = 2.0) -> float:
    """Least-squares slope of ln|j| for the field j(0)=0, j'(0)=1."""
    grid = np.linspace(0.0, t_end, 81)[1:]
    traj = flow(model, start, "physical", t_end, t_eval=grid, record=False, jacobi=(0.0, 1.0))
    rec = traj.records
    t = rec[:, 0]
    j = np.abs(rec[:, 10])
    keep = t >= t_fit
    slope, _ = np.polyfit(t[keep], np.log(j[keep]), 1)
    return float(slope)
