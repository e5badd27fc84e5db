import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renflow.errors import BadParams, BoundaryPoint, CurvatureNotNegative
from renflow.surface_models import BdfShift, SurfaceModel, curvature, make_model


def fd_curvature_perturbed(model, x, y, h=1e-4):
    """kappa = e^{-2 phi}(-1 - rho^2 Lap(phi)) with a 5-point Laplacian of the bump."""
    b = model.bump
    mp.mp.dps = 40

    def phi(u, v):
        d2 = (u - b.cx) ** 2 + (v - b.cy) ** 2
        s = d2 / b.radius ** 2
        return b.amplitude * mp.e ** (1 - 1 / (1 - s)) if s < 1 else mp.mpf(0)

    x, y = mp.mpf(x), mp.mpf(y)
    lap = (phi(x + h, y) + phi(x - h, y) + phi(x, y + h) + phi(x, y - h) - 4 * phi(x, y)) / h ** 2
    rho = (1 - x * x - y * y) / 2
    return float(mp.e ** (-2 * phi(x, y)) * (-1 - rho ** 2 * lap))


def test_disk_rho_and_curvature(disk):
    assert disk.rho((0.3, -0.4)) == pytest.approx((1 - 0.25) / 2, abs=1e-15)
    assert curvature(disk, (0.3, -0.4)) == pytest.approx(-1.0, abs=1e-12)


def test_half_plane_rho_and_curvature(half_plane):
    assert half_plane.rho((2.0, 0.7)) == 0.7
    assert curvature(half_plane, (2.0, 0.7)) == pytest.approx(-1.0, abs=1e-12)


def test_cylinder_normal_form(cylinder):
    t = 0.8
    assert cylinder.rho((t, 0.2)) == pytest.approx(1 / math.cosh(t), rel=1e-14)
    assert curvature(cylinder, (t, 0.2)) == pytest.approx(-1.0, abs=1e-10)
    g = cylinder.metric((t, 0.2))
    assert g[1, 1] == pytest.approx(math.cosh(t) ** 2, rel=1e-14)
    # |d rho|^2 in rho^2 g tends to 1
    assert cylinder.bdf_norm_sq((math.acosh(1e4), 0.1)) == pytest.approx(1.0, abs=1e-3)


def test_zero_amplitude_bump_is_hyperbolic():
    m = make_model("perturbed_disk", {"bump": {"amplitude": 0.0}})
    assert curvature(m, (0.1, 0.2)) == pytest.approx(-1.0, abs=1e-12)


def test_bump_center_curvature_against_finite_differences(perturbed):
    # [DERIVED] oracle: 5-point Laplacian of the bump at 40 digits, frozen below
    c = (perturbed.bump.cx, perturbed.bump.cy)
    oracle = fd_curvature_perturbed(perturbed, *c)
    assert oracle == pytest.approx(-0.813429, abs=2e-6)
    assert -1.2 < curvature(perturbed, c) < -0.8
    assert curvature(perturbed, c) == pytest.approx(oracle, abs=1e-6)


def test_perturbed_curvature_random_points(perturbed):
    rng = np.random.default_rng(3)
    for _ in range(50):
        r, a = 0.8 * math.sqrt(rng.random()), rng.uniform(0, 2 * math.pi)
        x, y = r * math.cos(a), r * math.sin(a)
        assert curvature(perturbed, (x, y)) == pytest.approx(fd_curvature_perturbed(perturbed, x, y), abs=1e-5)


def test_bdf_normalization_slope(disk, half_plane, cylinder):
    # |d rho / rho|_g = 1 + O(rho): the deviation shrinks with rho
    pts = {"disk": lambda r: (math.sqrt(1 - 2 * r), 0.0),
           "half_plane": lambda r: (0.3, r),
           "cylinder": lambda r: (math.acosh(1 / r), 0.2)}
    for m in (disk, half_plane, cylinder):
        devs = [abs(m.bdf_norm_sq(pts[m.kind](r)) - 1.0) for r in (1e-2, 1e-3, 1e-4)]
        assert devs[2] <= 1e-3
        assert devs[2] <= devs[0] + 1e-15


def test_refuses_positive_curvature():
    with pytest.raises(CurvatureNotNegative):
        make_model("perturbed_disk", {"bump": {"amplitude": -3.0, "radius": 0.3}})


@pytest.mark.parametrize("params", [{"neck_length": 0.0}, {"neck_length": -1.0}])
def test_bad_neck(params):
    with pytest.raises(BadParams):
        make_model("cylinder", params)


def test_bad_bump_radius():
    with pytest.raises(BadParams):
        make_model("perturbed_disk", {"bump": {"radius": 0.0}})


def test_curvature_on_boundary_raises(disk):
    with pytest.raises(BoundaryPoint):
        curvature(disk, (1.0, 0.0))


def test_models_are_immutable(disk):
    with pytest.raises(Exception):
        disk.kind = "half_plane"
    with pytest.raises(ValueError):
        disk.params[0] = 3.0


@pytest.mark.parametrize("text", ["zero", "constant:0.5", "bump:0.2,0,0.5"])
def test_shift_presets_round_trip(text):
    assert BdfShift.parse(BdfShift.parse(text).render()) == BdfShift.parse(text)


def test_model_dict_round_trip(perturbed, cylinder):
    for m in (perturbed, cylinder, make_model("disk", {"bdf_shift": "constant:0.5"})):
        assert SurfaceModel.from_dict(m.to_dict()) == m


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(0.0, 2 * math.pi))
def test_disk_metric_is_conformal_hyperbolic(r, a):
    disk = make_model("disk")
    x, y = r * math.cos(a), r * math.sin(a)
    g = disk.metric((x, y))
    assert g[0, 1] == 0.0
    assert g[0, 0] == pytest.approx(4 / (1 - r * r) ** 2, rel=1e-12)
