"""Catalogue of asymptotically hyperbolic model surfaces.

Chart conventions exposed to callers:

* ``disk`` / ``perturbed_disk``: Euclidean point ``(x, y)`` of the unit disk,
  ``rho = (1 - |z|^2) / 2``, boundary coordinate the polar angle (period 2 pi).
* ``half_plane``: ``(x, y)`` with ``y > 0``, ``rho = y``, boundary coordinate ``x``.
* ``cylinder``: Fermi coordinates ``(t, theta)`` around the neck geodesic,
  ``g = dt^2 + l^2 cosh^2 t dtheta^2``, ``theta`` of period 1, ``rho = sech t``.
  The two boundary circles are ``t -> -inf`` (end -1) and ``t -> +inf`` (end +1).

The compiled flow works in the conformal strip coordinate ``s = gd(t) / l``
for the cylinder; conversions live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _flowcore as fc
from .errors import BadParams, BoundaryPoint, CurvatureNotNegative

KINDS = {"disk": fc.DISK, "half_plane": fc.HALF_PLANE, "cylinder": fc.CYLINDER,
         "perturbed_disk": fc.PERTURBED_DISK}

GRID_N = 64
DEFAULT_BUMP = {"cx": 0.05, "cy": 0.05, "radius": 0.7, "amplitude": 0.05}
HALF_PLANE_BOX = 1.0e3


@dataclass(frozen=True)
class Bump:
    """Conformal bump e^{2 phi}, phi = a exp(1 - 1/(1 - (d/r)^2)) for d < r."""

    cx: float = DEFAULT_BUMP["cx"]
    cy: float = DEFAULT_BUMP["cy"]
    radius: float = DEFAULT_BUMP["radius"]
    amplitude: float = DEFAULT_BUMP["amplitude"]

    def phi(self, x, y):
        d2 = ((np.asarray(x) - self.cx) ** 2 + (np.asarray(y) - self.cy) ** 2) / self.radius ** 2
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            val = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - d2))
        return np.where(d2 < 1.0, val, 0.0)


@dataclass(frozen=True)
class BdfShift:
    """Function omega of the boundary coordinate used to rescale rho.

    ``kind`` is ``"zero"``, ``"constant"`` (value ``amplitude``) or ``"bump"``
    (a smooth bump of height ``amplitude`` centred at ``center`` with half
    width ``width``, measured periodically when the boundary is a circle).
    """

    kind: str = "zero"
    amplitude: float = 0.0
    center: float = 0.0
    width: float = 1.0

    @classmethod
    def parse(cls, text: str) -> "BdfShift":
        text = (text or "zero").strip()
        if text == "zero":
            return cls()
        name, _, rest = text.partition(":")
        try:
            vals = [float(v) for v in rest.split(",")] if rest else []
        except ValueError as exc:
            raise BadParams(f"bad bdf_shift preset {text!r}") from exc
        if name == "constant" and len(vals) == 1:
            return cls("constant", vals[0])
        if name == "bump" and len(vals) == 3:
            if vals[2] <= 0:
                raise BadParams("bdf_shift bump width must be positive")
            return cls("bump", vals[0], vals[1], vals[2])
        raise BadParams(f"bad bdf_shift preset {text!r}")

    def render(self) -> str:
        if self.kind == "zero":
            return "zero"
        if self.kind == "constant":
            return f"constant:{self.amplitude!r}"
        return f"bump:{self.amplitude!r},{self.center!r},{self.width!r}"

    def code(self) -> int:
        return {"zero": 0, "constant": 1, "bump": 2}[self.kind]


@dataclass(frozen=True)
class SurfaceModel:
    kind: str
    neck_length: float | None = None
    bump: Bump | None = None
    bdf_shift: BdfShift = field(default_factory=BdfShift)
    period: float | None = None

    @cached_property
    def params(self) -> np.ndarray:
        """Parameter vector consumed by the compiled kernels."""
        p = np.zeros(fc.NPARAM)
        p[fc.P_KIND] = KINDS[self.kind]
        if self.kind == "cylinder":
            ell = self.neck_length
            p[fc.P_ELL] = ell
            p[fc.P_RLO], p[fc.P_RHI] = 0.3, 0.5
        elif self.kind == "half_plane":
            p[fc.P_BOXX] = p[fc.P_BOXY] = HALF_PLANE_BOX
        else:
            rhi = 0.25
            if self.kind == "perturbed_disk" and self.bump is not None:
                b = self.bump
                p[fc.P_CX], p[fc.P_CY] = b.cx, b.cy
                p[fc.P_RB], p[fc.P_AMP] = b.radius, b.amplitude
                reach = math.hypot(b.cx, b.cy) + b.radius
                # keep the collar chart outside the bump support
                rhi = min(0.25, 0.9 * (1.0 - reach ** 2) / 2.0)
            p[fc.P_RLO], p[fc.P_RHI] = 0.6 * rhi, rhi
        s = self.bdf_shift
        p[fc.P_SHIFT] = s.code()
        p[fc.P_SA], p[fc.P_SY0], p[fc.P_SW] = s.amplitude, s.center, s.width
        p[fc.P_PERIOD] = self.period or 0.0
        p.setflags(write=False)
        return p

    @property
    def is_disk_family(self) -> bool:
        return self.kind in ("disk", "perturbed_disk")

    def with_shift(self, shift: BdfShift | str) -> "SurfaceModel":
        if isinstance(shift, str):
            shift = BdfShift.parse(shift)
        return SurfaceModel(self.kind, self.neck_length, self.bump, shift, self.period)

    # -- descriptors -------------------------------------------------------
    def to_dict(self) -> dict:
        out = {"kind": self.kind, "neck_length": self.neck_length, "bump": None,
               "bdf_shift": self.bdf_shift.render()}
        if self.bump is not None:
            b = self.bump
            out["bump"] = {"cx": b.cx, "cy": b.cy, "radius": b.radius, "amplitude": b.amplitude}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SurfaceModel":
        params = {}
        if d.get("neck_length") is not None:
            params["neck_length"] = d["neck_length"]
        if d.get("bump"):
            params["bump"] = d["bump"]
        if d.get("bdf_shift"):
            params["bdf_shift"] = d["bdf_shift"]
        return make_model(d["kind"], params)

    # -- chart conversions -------------------------------------------------
    def to_internal(self, point) -> tuple[float, float]:
        """Public chart point -> conformal chart used by the kernels."""
        a, b = float(point[0]), float(point[1])
        if self.kind == "cylinder":
            return 2.0 * math.atan(math.tanh(0.5 * a)) / self.neck_length, b
        return a, b

    def from_internal(self, point) -> tuple[float, float]:
        a, b = float(point[0]), float(point[1])
        if self.kind == "cylinder":
            return 2.0 * math.atanh(math.tan(0.5 * self.neck_length * a)), b
        return a, b

    # -- geometry at interior points ---------------------------------------
    def rho(self, point) -> float:
        a, b = float(point[0]), float(point[1])
        if self.kind == "cylinder":
            return 1.0 / math.cosh(a)
        if self.kind == "half_plane":
            return b
        return 0.5 * (1.0 - a * a - b * b)

    def boundary_coordinate(self, point) -> float:
        a, b = float(point[0]), float(point[1])
        if self.kind == "cylinder":
            return b
        if self.kind == "half_plane":
            return a
        return math.atan2(b, a)

    def drho(self, point) -> np.ndarray:
        a, b = float(point[0]), float(point[1])
        if self.kind == "cylinder":
            return np.array([-math.tanh(a) / math.cosh(a), 0.0])
        if self.kind == "half_plane":
            return np.array([0.0, 1.0])
        return np.array([-a, -b])

    def conformal_exponent(self, point) -> float:
        """u with g = e^{2u}|dx|^2 (disk family and half-plane charts)."""
        a, b = float(point[0]), float(point[1])
        if self.kind == "half_plane":
            return -math.log(b)
        u = math.log(2.0) - math.log(1.0 - a * a - b * b)
        if self.bump is not None:
            u += float(self.bump.phi(a, b))
        return u

    def metric(self, point) -> np.ndarray:
        """Metric matrix in the public chart."""
        self._check_interior(point)
        if self.kind == "cylinder":
            ch = math.cosh(float(point[0]))
            return np.diag([1.0, (self.neck_length * ch) ** 2])
        return math.exp(2.0 * self.conformal_exponent(point)) * np.eye(2)

    def metric_derivatives(self, point) -> np.ndarray:
        """Array D with D[k] = d(metric)/d(x_k)."""
        self._check_interior(point)
        a, b = float(point[0]), float(point[1])
        if self.kind == "cylinder":
            ell = self.neck_length
            d = np.zeros((2, 2, 2))
            d[0, 1, 1] = 2.0 * ell * ell * math.cosh(a) * math.sinh(a)
            return d
        g = np.empty(9)
        fc.interior_geometry(self.params, a, b, g)
        e2u = math.exp(2.0 * self.conformal_exponent(point))
        return np.stack([2.0 * g[2] * e2u * np.eye(2), 2.0 * g[3] * e2u * np.eye(2)])

    def boundary_data(self, point):
        """Normal-form data (rho, y, h, dh/drho, dh/dy, A) near the boundary.

        The metric is written ``(A^{-1} drho^2 + h dy^2) / rho^2``.  Only the
        cylinder and half-plane charts expose this form; the disk family is
        handled in its Euclidean chart and returns ``None``.
        """
        if self.is_disk_family:
            return None
        rho = self.rho(point)
        y = self.boundary_coordinate(point)
        if self.kind == "half_plane":
            return rho, y, 1.0, 0.0, 0.0, 1.0
        ell = self.neck_length
        return rho, y, ell * ell, 0.0, 0.0, 1.0 - rho * rho

    def bdf_norm_sq(self, point) -> float:
        """|d rho|^2 measured in the compactified metric rho^2 g."""
        self._check_interior(point)
        dr = self.drho(point)
        ginv = np.linalg.inv(self.metric(point))
        rho = self.rho(point)
        return float(dr @ ginv @ dr) / rho ** 2

    def omega(self, y: float) -> float:
        return float(fc.shift_omega(self.params, float(y)))

    def boundary_point(self, y: float, rho: float, end: int = 1):
        """Public chart point with boundary coordinate y at level rho."""
        if self.kind == "half_plane":
            return (y, rho)
        if self.kind == "cylinder":
            return (end * math.acosh(1.0 / rho), y)
        r = math.sqrt(1.0 - 2.0 * rho)
        return (r * math.cos(y), r * math.sin(y))

    def _check_interior(self, point):
        if self.rho(point) <= 0.0:
            raise BoundaryPoint(f"point {tuple(point)} is on the boundary")


def curvature(model: SurfaceModel, point) -> float:
    """Gauss curvature at an interior chart point."""
    model._check_interior(point)
    if model.kind in ("disk", "half_plane", "cylinder"):
        return -1.0
    return float(fc.interior_curvature(model.params, float(point[0]), float(point[1])))


def validation_grid(model: SurfaceModel):
    """Deterministic 64 x 64 chart grid used for construction checks."""
    n = GRID_N
    if model.is_disk_family:
        u = np.linspace(-1.0, 1.0, n + 2)[1:-1]
        xx, yy = np.meshgrid(u, u)
        keep = xx ** 2 + yy ** 2 < 1.0
        return np.column_stack([xx[keep], yy[keep]])
    if model.kind == "half_plane":
        xs = np.linspace(-5.0, 5.0, n)
        ys = np.linspace(0.05, 5.0, n)
    else:
        xs = np.linspace(-6.0, 6.0, n)
        ys = np.linspace(0.0, 1.0, n, endpoint=False)
    xx, yy = np.meshgrid(xs, ys)
    return np.column_stack([xx.ravel(), yy.ravel()])


def boundary_grid(model: SurfaceModel, n: int = GRID_N) -> np.ndarray:
    if model.kind == "half_plane":
        return np.linspace(-5.0, 5.0, n)
    return np.linspace(0.0, model.period, n, endpoint=False)


def _validate(model: SurfaceModel):
    for pt in validation_grid(model):
        k = curvature(model, pt)
        if not k < 0.0:
            raise CurvatureNotNegative(f"curvature {k} at {tuple(pt)}")
    for y in boundary_grid(model):
        ends = (-1, 1) if model.kind == "cylinder" else (1,)
        for end in ends:
            pt = model.boundary_point(y, 1e-4, end)
            if abs(model.bdf_norm_sq(pt) - 1.0) > 1e-3:
                raise BadParams(f"|d rho| is not 1 at the boundary near y={y}")
        bd = model.boundary_data(model.boundary_point(y, 1e-9, 1))
        if bd is not None and not bd[2] > 0.0:
            raise BadParams("boundary metric is degenerate")


def make_model(kind: str, params: dict | None = None) -> SurfaceModel:
    """Build and validate a model surface.

    ``params`` keys: ``neck_length`` (cylinder), ``bump`` (perturbed disk; a
    mapping with ``cx, cy, radius, amplitude``, defaults filled in) and
    ``bdf_shift`` (preset string or :class:`BdfShift`).
    """
    params = dict(params or {})
    if kind not in KINDS:
        raise BadParams(f"unknown model kind {kind!r}")
    shift = params.get("bdf_shift", "zero")
    if isinstance(shift, str):
        shift = BdfShift.parse(shift)
    neck = None
    bump = None
    if kind == "cylinder":
        neck = float(params.get("neck_length", 1.0))
        if not neck > 0.0:
            raise BadParams("neck_length must be positive")
        period = 1.0
    elif kind == "half_plane":
        period = None
    else:
        period = 2.0 * math.pi
    if kind == "perturbed_disk":
        spec = params.get("bump") or {}
        if isinstance(spec, Bump):
            bump = spec
        else:
            merged = {**DEFAULT_BUMP, **spec}
            bump = Bump(float(merged["cx"]), float(merged["cy"]),
                        float(merged["radius"]), float(merged["amplitude"]))
        if not bump.radius > 0.0:
            raise BadParams("bump radius must be positive")
        if math.hypot(bump.cx, bump.cy) + bump.radius >= 1.0:
            raise BadParams("bump support must stay inside the disk")
    model = SurfaceModel(kind, neck, bump, shift, period)
    _validate(model)
    return model
