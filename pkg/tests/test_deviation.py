import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renflow import closed_forms as cf
from renflow.deviation import (CHECK_FLOOR, PROFILE_CSV_HEADER, ConvexTestFn, DeviationEngine,
                               OtalParams, ThetaProfile, deviation_angle, gauss_bonnet_defect,
                               identity_profile, jensen_check, otal_analyze,
                               superadditivity_defect, theta_grid, theta_profile, triangle_for)
from renflow.errors import BadParams, NonConvexJ
from renflow.geoflow import ChartRay
from renflow.surface_models import curvature, make_model


@pytest.fixture(scope="module")
def profiles(disk, perturbed):
    small = theta_profile(disk, perturbed, 0.05, 7, 2000, seed=1)
    large = theta_profile(disk, perturbed, 0.05, 7, 8000, seed=1)
    return small, large


def random_bases(rng, n, radius=0.8):
    out = []
    for _ in range(n):
        r, a = radius * math.sqrt(rng.random()), rng.uniform(0, 2 * math.pi)
        out.append(ChartRay((r * math.cos(a), r * math.sin(a)), rng.uniform(0, 2 * math.pi)))
    return out


def geodesic_through(engine, p, q):
    a, b = cf.disk_ray_endpoints(p, cmath.phase(cf.disk_tangent(p, q)))
    return engine.g2_trajectory(complex(a), complex(b))


# -- single samples ------------------------------------------------------------

@pytest.mark.parametrize("numeric", [False, True])
def test_identity_pair(disk, numeric):
    for base in random_bases(np.random.default_rng(2), 5):
        s = deviation_angle(disk, disk, base, math.pi / 3, numeric=numeric)
        assert s.f == pytest.approx(math.pi / 3, abs=1e-6)
        assert math.dist(s.image_point, base.point) <= 1e-6


def test_far_from_bump(disk, perturbed):
    # both chords clear the geodesic hull of the bump, so the two metrics agree there
    ch, rh = cf.hyperbolic_disk_of(complex(perturbed.bump.cx, perturbed.bump.cy),
                                   perturbed.bump.radius)
    engine = DeviationEngine(disk, perturbed, numeric=True)
    rng = np.random.default_rng(8)
    done = 0
    while done < 5:
        base = random_bases(rng, 1, 0.99)[0]
        theta = rng.uniform(0.2, 2.9)
        z = complex(*base.point)
        ends = [cf.disk_ray_endpoints(z, base.heading + t) for t in (0.0, theta)]
        if not all(cf.geodesic_clears_disk(a, b, ch, rh, 0.05) for a, b in ends):
            continue
        assert engine.sample(base, theta).f == pytest.approx(theta, abs=1e-6)
        done += 1


@pytest.mark.parametrize("numeric", [False, True])
def test_pi_symmetry_samplewise(disk, perturbed, numeric):
    engine = DeviationEngine(disk, perturbed, numeric=numeric)
    rng = np.random.default_rng(6)
    for base in random_bases(rng, 6, 0.5):
        theta = rng.uniform(0.1, 3.0)
        rotated = ChartRay(base.point, base.heading + theta)
        total = engine.sample(base, theta).f + engine.sample(rotated, math.pi - theta).f
        assert total == pytest.approx(math.pi, abs=1e-6)


def test_fast_and_numeric_routes_agree(disk, perturbed):
    fast = DeviationEngine(disk, perturbed)
    slow = DeviationEngine(disk, perturbed, numeric=True)
    for base in random_bases(np.random.default_rng(12), 6, 0.6):
        for theta in (0.4, 1.7):
            assert fast.sample(base, theta).f == pytest.approx(slow.sample(base, theta).f, abs=1e-8)


def test_f_matrix_matches_samples(disk, perturbed):
    engine = DeviationEngine(disk, perturbed)
    bases = random_bases(np.random.default_rng(13), 8, 0.6)
    thetas = theta_grid(5)
    z = np.array([complex(*b.point) for b in bases])
    psi = np.array([b.heading for b in bases])
    F = engine.f_matrix(z, psi, thetas)
    for i, b in enumerate(bases):
        for k, th in enumerate(thetas):
            assert F[i, k] == pytest.approx(engine.sample(b, th).f, abs=1e-7)


def test_superadditivity_samplewise(disk, perturbed):
    engine = DeviationEngine(disk, perturbed)
    rng = np.random.default_rng(10)
    for base in random_bases(rng, 6, 0.5):
        t1, t2 = rng.uniform(0.2, 1.4, 2)
        assert superadditivity_defect(engine, base, t1, t2) >= -1e-6


def test_superadditivity_defect_is_curvature_integral(disk, perturbed):
    engine = DeviationEngine(disk, perturbed)
    base = ChartRay((0.05, 0.05), 0.3)
    gap = superadditivity_defect(engine, base, 0.7, 0.9)
    defect, integral = gauss_bonnet_defect(perturbed, triangle_for(engine, base, 0.7, 0.9))
    assert gap == pytest.approx(defect, abs=1e-6)
    assert gap == pytest.approx(-integral, abs=1e-4)


def test_identity_superadditivity_saturates(disk):
    engine = DeviationEngine(disk, disk)
    base = ChartRay((0.1, -0.2), 1.0)
    assert superadditivity_defect(engine, base, 0.5, 0.8) == pytest.approx(0.0, abs=1e-12)
    defect, _ = gauss_bonnet_defect(disk, triangle_for(engine, base, 0.5, 0.8))
    assert abs(defect) < 1e-8


def test_theta_range_enforced(disk):
    with pytest.raises(BadParams):
        deviation_angle(disk, disk, ChartRay((0.0, 0.0), 0.0), math.pi)


def test_needs_disk_family(disk, cylinder):
    with pytest.raises(NotImplementedError):
        DeviationEngine(disk, cylinder)


# -- Gauss-Bonnet --------------------------------------------------------------

def test_regular_triangle_area(disk):
    # [DERIVED] regular hyperbolic triangle: cot(alpha/2) = sqrt 3 cosh R, area = pi - 3 alpha
    r = 0.3
    R = 2.0 * math.atanh(r)
    alpha = 2.0 * math.atan(1.0 / (math.sqrt(3.0) * math.cosh(R)))
    area = math.pi - 3.0 * alpha
    engine = DeviationEngine(disk, disk)
    v = [r * cmath.exp(2j * math.pi * k / 3) for k in range(3)]
    tri = [geodesic_through(engine, v[k], v[(k + 1) % 3]) for k in range(3)]
    defect, integral = gauss_bonnet_defect(disk, tri)
    assert defect == pytest.approx(area, abs=1e-4)
    assert -integral == pytest.approx(area, abs=1e-4)
    assert defect == pytest.approx(cf.disk_triangle_area(*v), abs=1e-8)


def test_tiny_triangle(disk):
    engine = DeviationEngine(disk, disk)
    c = complex(0.2, 0.1)
    v = [c + 1e-4 * cmath.exp(2j * math.pi * k / 3) for k in range(3)]
    tri = [geodesic_through(engine, v[k], v[(k + 1) % 3]) for k in range(3)]
    defect, integral = gauss_bonnet_defect(disk, tri)
    assert abs(defect) < 1e-6 and abs(integral) < 1e-6


def test_triangle_over_bump(perturbed):
    engine = DeviationEngine(perturbed, perturbed)
    v = [complex(0.05, 0.05) + 0.35 * cmath.exp(2j * math.pi * k / 3 + 0.2j) for k in range(3)]
    # the sides are g2 geodesics between the g1 (= g2) boundary ends through each vertex pair
    tri = []
    for k in range(3):
        p, q = v[k], v[(k + 1) % 3]
        a, b = engine.g1_endpoints(p, cmath.phase(q - p))
        tri.append(engine.g2_trajectory(complex(a[0]), complex(b[0])))
    defect, integral = gauss_bonnet_defect(perturbed, tri)
    assert defect == pytest.approx(-integral, abs=1e-4)
    assert curvature(perturbed, (0.05, 0.05)) != pytest.approx(-1.0, abs=0.1)
    assert defect > 0.0


# -- Theta profiles ------------------------------------------------------------

@pytest.mark.parametrize("eps", [0.005, 0.1])
def test_identity_profile_sampled(disk, eps):
    prof = theta_profile(disk, disk, eps, 8, 2000, seed=3)
    assert np.all(np.abs(prof.values - prof.thetas) <= 3 * prof.mc_err + CHECK_FLOOR)


def test_profile_symmetries(profiles):
    _, prof = profiles
    for v, se in prof.pi_symmetry():
        assert abs(v) <= 3 * se + CHECK_FLOOR
    # theta grid is k pi / 8: pi/4 is index 1 and pi/2 is index 3
    assert prof.thetas[1] == pytest.approx(math.pi / 4)
    assert prof.thetas[3] == pytest.approx(math.pi / 2)
    v, se = prof.combination(prof._unit((1, 2.0), (3, -1.0)))
    assert v <= 3 * se + CHECK_FLOOR
    for key, (v, se) in prof.endpoint_checks().items():
        assert abs(v) <= 3 * se + CHECK_FLOOR, key
    assert prof.monotone_violation() <= 0.0


def test_mc_error_scaling(profiles):
    small, large = profiles
    ratio = small.mc_err / large.mc_err
    assert np.all((ratio > 1.6) & (ratio < 2.4))


def test_profile_csv(profiles):
    _, prof = profiles
    lines = prof.to_csv().splitlines()
    assert lines[0] == PROFILE_CSV_HEADER
    assert len(lines) == 8
    assert lines[1].split(",")[-1] == str(prof.n_samples)


def test_profile_eps_range(disk):
    with pytest.raises(BadParams):
        theta_profile(disk, disk, 0.2, 4, 100)


# -- Jensen --------------------------------------------------------------------

def test_jensen_identity():
    lhs, rhs, slack, se = jensen_check(identity_profile(), ConvexTestFn("hinge"))
    assert slack == pytest.approx(0.0, abs=1e-6)
    assert lhs == pytest.approx(rhs, abs=1e-6)


def test_jensen_abs_hinge(profiles):
    _, prof = profiles
    _, _, slack, se = jensen_check(prof, ConvexTestFn("abs_hinge"))
    assert slack >= -(3 * se + 1e-4)


def test_jensen_linear_both_ways(profiles):
    # a linear J is convex with either sign, so both slacks must pass
    _, prof = profiles
    _, _, up, se_up = jensen_check(prof, ConvexTestFn("linear", 1.0))
    _, _, down, se_down = jensen_check(prof, ConvexTestFn("linear", -1.0))
    assert up >= -(3 * se_up + 1e-4)
    assert down >= -(3 * se_down + 1e-4)
    assert up == pytest.approx(-down, abs=1e-12)


def test_jensen_rejects_concave():
    concave = ConvexTestFn("custom_grid", grid=tuple(np.sin(np.linspace(0, math.pi, 9))))
    with pytest.raises(NonConvexJ):
        jensen_check(identity_profile(), concave)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=5, max_size=12))
def test_convex_grids_accepted(increments):
    # cumulative sums of sorted slopes form a convex piecewise-linear function
    slopes = np.sort(np.asarray(increments))
    grid = np.concatenate([[0.0], np.cumsum(slopes)])
    ConvexTestFn("custom_grid", grid=tuple(grid)).check_convex()


def test_isotonic_repair_used():
    th = theta_grid(5)
    vals = th.copy()
    vals[2], vals[3] = vals[3] + 0.01, vals[2] - 0.01
    prof = ThetaProfile(0.02, th, vals, np.zeros(5), 10)
    lhs, rhs, _, _ = jensen_check(prof, ConvexTestFn("linear"))
    assert np.isfinite(lhs) and np.isfinite(rhs)


# -- Otal analysis -------------------------------------------------------------

def test_critical_exponent_values():
    assert OtalParams(0.0, 1.0, 0.0).gamma_hat == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert OtalParams(1.0, 0.5, 0.1).gamma_hat == pytest.approx(0.32, abs=1e-15)
    with pytest.raises(BadParams):
        OtalParams(0.0, 0.0, 0.0)


def test_identity_report():
    rep = otal_analyze(identity_profile(), OtalParams(0.0, 1.0, 0.0))
    assert rep["sup_dev"] == 0.0
    for key in ("endpoint_residual_0", "endpoint_residual_pi", "pi_symmetry_residual",
                "superadditivity_violation", "monotone_violation"):
        assert abs(rep[key]) <= 1e-14, key
    assert rep["intervals"] is None


def test_diagnostic_intervals_nest():
    th = theta_grid(31)
    vals = th - 0.2 * np.sin(th) ** 2 * np.sin(2 * th)
    prof = ThetaProfile(0.02, th, vals, np.zeros(31), 10)
    rep = otal_analyze(prof, OtalParams(0.0, 1.0, 0.0), threshold=0.05)
    iv = rep["intervals"]
    order = [iv[k] for k in ("c", "b", "a", "A", "B", "C")]
    assert all(x <= y for x, y in zip(order, order[1:]))
    assert rep["sup_dev"] > 0.05
