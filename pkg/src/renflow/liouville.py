"""Liouville current masses of crossing sets.

The current is flip invariant, so all masses here are unsigned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import dblquad

from . import closed_forms as cf
from .connect import GeodesicSpec
from .errors import BadParams
from .renlen import renormalized_length
from .surface_models import SurfaceModel

BOX_CSV_HEADER = "modelA,modelB,E0,E1,F0,F1,mass_a,mass_b,diff"


@dataclass(frozen=True)
class CrossingMeasure:
    value: float
    method: str
    target: tuple
    err: float = 0.0


def segment_length(model: SurfaceModel, x, x_prime) -> float:
    """Length of the geodesic arc between two interior chart points."""
    if model.kind == "disk":
        return cf.disk_distance(complex(*x), complex(*x_prime))
    if model.kind == "half_plane":
        return cf.half_plane_distance(x, x_prime)
    if model.kind == "cylinder":
        return cf.cylinder_distance(model.neck_length, x, x_prime)
    raise NotImplementedError("segment lengths on the perturbed disk")


def crossing_mass_segment(model: SurfaceModel, x, x_prime, method: str = "distance_formula") -> CrossingMeasure:
    """Mass of the geodesics crossing the arc [x, x'].

    ``distance_formula`` returns twice the length; ``quadrature`` integrates
    sin(theta) over (arclength, crossing angle) in [0, d] x [0, pi].
    """
    for pt in (x, x_prime):
        if model.rho(pt) <= 0.0:
            raise BadParams("segment endpoints must be interior")
    d = 0.0 if tuple(x) == tuple(x_prime) else segment_length(model, x, x_prime)
    if method == "distance_formula":
        value = 2.0 * d
    elif method == "quadrature":
        if d == 0.0:
            value = 0.0
        else:
            value, _ = dblquad(lambda th, tau: math.sin(th), 0.0, d, 0.0, math.pi,
                               epsabs=1e-12, epsrel=1e-12)
    else:
        raise BadParams(f"unknown method {method!r}")
    return CrossingMeasure(value, method, (tuple(x), tuple(x_prime)))


def _disjoint(model: SurfaceModel, E, F) -> bool:
    if model.period:
        per = model.period
        e0 = E[0] % per
        e_len = (E[1] - E[0]) % per
        f_start = (F[0] - e0) % per
        f_end = f_start + (F[1] - F[0]) % per
        return e_len < f_start and f_end < per
    lo_e, hi_e = sorted(E)
    lo_f, hi_f = sorted(F)
    return hi_e < lo_f or hi_f < lo_e


def crossing_mass_box(model: SurfaceModel, E, F, eps0: float = 0.02, levels: int = 5) -> CrossingMeasure:
    """Mass of the geodesics with one end in E and the other in F.

    E = (x1, x2) and F = (x3, x4) are boundary intervals (arcs run in the
    positive direction on a circle).  Overlapping closures give +inf.
    """
    if model.kind == "cylinder":
        raise NotImplementedError("boxes on the cylinder")
    if not _disjoint(model, E, F):
        return CrossingMeasure(math.inf, "quadrilateral", (tuple(E), tuple(F)), 0.0)
    x1, x2 = E
    x3, x4 = F

    def ren(a, b):
        return renormalized_length(model, GeodesicSpec(a, b), eps0, levels)

    terms = [ren(x1, x3), ren(x2, x4), ren(x2, x3), ren(x1, x4)]
    value = terms[0].L + terms[1].L - terms[2].L - terms[3].L
    err = sum(t.err for t in terms)
    return CrossingMeasure(abs(value), "quadrilateral", (tuple(E), tuple(F)), err)


def current_agreement(model_a: SurfaceModel, model_b: SurfaceModel, boxes, eps0: float = 0.02,
                      levels: int = 5):
    """Largest box-mass discrepancy between two metrics, with per-box rows."""
    rows = []
    worst = 0.0
    for E, F in boxes:
        ma = crossing_mass_box(model_a, E, F, eps0, levels).value
        mb = crossing_mass_box(model_b, E, F, eps0, levels).value
        diff = abs(ma - mb) if math.isfinite(ma) and math.isfinite(mb) else (0.0 if ma == mb else math.inf)
        worst = max(worst, diff)
        rows.append((model_a.kind, model_b.kind, E[0], E[1], F[0], F[1], ma, mb, diff))
    return worst, rows
