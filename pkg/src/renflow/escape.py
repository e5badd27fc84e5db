"""Non-escaping mass V_eps(T) and its exponential decay rate.

V_eps(T) is the Liouville mass of unit vectors in M_eps = {rho >= eps} that
stay in M_eps for time T.  By Santalo's formula it is the boundary integral
of (l - T)_+ against sin(omega) d(omega) d(arclength), with l the chord length
of the ray entering M_eps at angle omega.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import closed_forms as cf
from .errors import AllEscaped, BadParams
from .geoflow import T_MAX, PhasePoint, flow, inside_length
from .sampling import run_chunks, santalo_draw
from .surface_models import SurfaceModel

ESCAPE_CSV_HEADER = "eps,T,V,mc_err"
FIT_CSV_HEADER = "Q,window_lo,window_hi"
DEFAULT_T_GRID = tuple(np.arange(0.0, 16.5, 0.5))


@dataclass
class EscapeStats:
    eps: float
    T: np.ndarray
    V: np.ndarray
    mc_err: np.ndarray
    Q: float
    window: tuple
    n_samples: int
    delta_rate: float | None = None
    cutoff_hits: int = 0
    cutoff: float = T_MAX

    def to_csv(self) -> str:
        lines = [ESCAPE_CSV_HEADER]
        for t, v, e in zip(self.T, self.V, self.mc_err):
            lines.append(f"{float(self.eps)!r},{float(t)!r},{float(v)!r},{float(e)!r}")
        lines.append(FIT_CSV_HEADER)
        lines.append(f"{float(self.Q)!r},{float(self.window[0])!r},{float(self.window[1])!r}")
        return "\n".join(lines) + "\n"


def boundary_length(model: SurfaceModel, eps: float) -> float:
    """Length of {rho = eps} (the level set lies outside any bump support)."""
    if model.kind in ("disk", "perturbed_disk"):
        return 2.0 * math.pi * cf.disk_circle_radius(eps) / eps
    if model.kind == "cylinder":
        return 2.0 * model.neck_length / eps
    raise NotImplementedError(f"escape statistics on {model.kind}")


def _numeric_lengths(model: SurfaceModel, eps: float, beta, omega, cutoff: float):
    """Chord lengths inside {rho >= eps} by integration from the outer boundary.

    The level set lies where the metric is still the disk metric, so the
    ray entering at angle omega continues a disk geodesic out to infinity.
    """
    r = cf.disk_circle_radius(eps)
    out = np.empty(len(beta))
    hits = 0
    for i, (b, w) in enumerate(zip(beta, omega)):
        x = r * cmath.exp(1j * b)
        bwd, fwd = cf.disk_ray_endpoints(x, b + 0.5 * math.pi + w)
        pa, pb = cmath.phase(bwd), cmath.phase(fwd)
        eta = 1.0 / math.tan(0.5 * ((pb - pa) % (2.0 * math.pi)))
        traj = flow(model, PhasePoint(0.0, pa, 1.0, eta), "b_time", math.inf, [eps],
                    record=False, cutoff=cutoff)
        if traj.trapped:
            out[i] = cutoff
            hits += 1
        else:
            out[i] = min(inside_length(traj, eps), cutoff)
    return out, hits


def chord_lengths(model: SurfaceModel, eps: float, rng, size: int, cutoff: float):
    """Santalo draws of the chord length l_{eps,+}; returns (lengths, cutoff hits)."""
    u, omega, _ = santalo_draw(rng, size)
    if model.kind == "disk" or (model.kind == "perturbed_disk" and model.bump.amplitude == 0.0):
        return np.minimum(cf.disk_chord_length(eps, omega), cutoff), 0
    if model.kind == "cylinder":
        l = cf.cylinder_exit_length(eps, omega)
        return np.minimum(l, cutoff), int(np.sum(l >= cutoff))
    if model.kind == "perturbed_disk":
        return _numeric_lengths(model, eps, 2.0 * math.pi * u, omega, cutoff)
    raise NotImplementedError(f"escape statistics on {model.kind}")


def fit_decay(T, V, err):
    """Least-squares slope of ln V on the largest-T half of the resolved grid."""
    T = np.asarray(T, dtype=float)
    good = np.flatnonzero(V > 10.0 * err)
    if len(good) == 0 or np.all(V <= 0.0):
        raise AllEscaped("V vanishes on the whole grid")
    resolved = good[good <= good.max()]
    tail = resolved[len(resolved) // 2:]
    if len(tail) < 2:
        raise AllEscaped("too few resolved grid points for a fit")
    slope, _ = np.polyfit(T[tail], np.log(V[tail]), 1)
    return float(slope), (float(T[tail[0]]), float(T[tail[-1]]))


def escape_profile(model: SurfaceModel, eps: float, T_grid=DEFAULT_T_GRID,
                   n_samples: int = 100_000, seed: int = 0, *, delta_rate: float | None = None,
                   cutoff: float = T_MAX) -> EscapeStats:
    """Estimate V_eps(T) on ``T_grid`` and fit its decay rate Q.

    When nothing survives, Q is reported as -inf.
    """
    if not 0.01 <= eps <= 0.2:
        raise BadParams("eps must lie in [0.01, 0.2]")
    T = np.asarray(T_grid, dtype=float)
    if T.ndim != 1 or len(T) == 0 or np.any(T < 0) or np.any(np.diff(T) <= 0):
        raise BadParams("T_grid must be increasing and nonnegative")
    perimeter = boundary_length(model, eps)

    def worker(rng, size):
        l, hits = chord_lengths(model, eps, rng, size, cutoff)
        return l, hits

    parts = run_chunks(worker, n_samples, seed)
    l = np.concatenate([p[0] for p in parts])
    hits = sum(p[1] for p in parts)
    excess = np.maximum(l[:, None] - T[None, :], 0.0)
    # sin(omega) d(omega) integrates to 2 over (0, pi)
    scale = 2.0 * perimeter
    V = scale * excess.mean(axis=0)
    err = scale * excess.std(axis=0, ddof=1) / math.sqrt(len(l))
    try:
        Q, window = fit_decay(T, V, err)
    except AllEscaped:
        Q, window = -math.inf, (math.nan, math.nan)
    if delta_rate is not None and not Q < delta_rate < 0.0:
        raise BadParams("delta_rate must lie in (Q, 0)")
    return EscapeStats(eps, T, V, err, Q, window, len(l), delta_rate, hits, cutoff)


def santalo_volume(model: SurfaceModel, eps: float) -> float:
    """2 pi times the hyperbolic area of {rho >= eps}, for closed-form models."""
    if model.kind == "disk":
        r2 = 1.0 - 2.0 * eps
        return 2.0 * math.pi * 4.0 * math.pi * r2 / (1.0 - r2)
    if model.kind == "cylinder":
        t = math.acosh(1.0 / eps)
        return 2.0 * math.pi * 2.0 * model.neck_length * math.sinh(t)
    raise NotImplementedError(f"volume of {model.kind}")


def scaling_excess(coarse: EscapeStats, fine: EscapeStats, delta: float) -> float:
    """Largest amount by which ln V_{eps/2} - ln V_eps exceeds (1 + 4|delta|) ln 2
    on the coarse fit window, less three relative standard errors."""
    lo, hi = coarse.window
    worst = -math.inf
    for i, t in enumerate(coarse.T):
        if not lo <= t <= hi:
            continue
        j = int(np.argmin(np.abs(fine.T - t)))
        if coarse.V[i] <= 0 or fine.V[j] <= 0:
            continue
        gap = math.log(fine.V[j]) - math.log(coarse.V[i])
        tol = 3.0 * (coarse.mc_err[i] / coarse.V[i] + fine.mc_err[j] / fine.V[j])
        worst = max(worst, gap - (1.0 + 4.0 * abs(delta)) * math.log(2.0) - tol)
    return worst


__all__ = ["EscapeStats", "escape_profile", "fit_decay", "santalo_volume", "scaling_excess",
           "boundary_length", "chord_lengths"]
