import cmath
import math

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from renflow.connect import GeodesicSpec
from renflow.renlen import (CSV_HEADER, conformal_shift_check, extended_distance,
                            mobius_check, renormalized_length, richardson)
from renflow.surface_models import make_model


def disk_oracle(p, q):
    return 2.0 * math.log(abs(cmath.exp(1j * p) - cmath.exp(1j * q)))


def test_diameter_length(disk):
    est = renormalized_length(disk, GeodesicSpec(0.0, math.pi))
    assert est.L == pytest.approx(2.0 * math.log(2.0), abs=1e-6)
    assert est.L == pytest.approx(1.386294, abs=1e-6)


def test_quarter_length(disk):
    est = renormalized_length(disk, GeodesicSpec(0.0, 0.5 * math.pi))
    assert est.L == pytest.approx(0.693147, abs=1e-6)


def test_single_rung(disk):
    # [DERIVED] 2 ln((1+r)/(1-r)) + 2 ln eps with r = sqrt(1 - 2 eps)
    mp.mp.dps = 30
    eps = mp.mpf("0.005")
    r = mp.sqrt(1 - 2 * eps)
    oracle = float(2 * mp.log((1 + r) / (1 - r)) + 2 * mp.log(eps))
    assert oracle == pytest.approx(1.376265, abs=1e-5)
    est = renormalized_length(disk, GeodesicSpec(0.0, math.pi), eps0=0.005, levels=1)
    assert est.L_eps[0] == pytest.approx(oracle, abs=1e-8)
    assert abs(est.L_eps[0] - 2 * math.log(2)) == pytest.approx(0.01003, abs=1e-5)


def test_estimate_invariants(perturbed):
    est = renormalized_length(perturbed, GeodesicSpec(0.5, 3.3), levels=6)
    gaps = [abs(v - est.L) for v in est.L_eps]
    assert all(b < a for a, b in zip(gaps[-3:], gaps[-2:]))
    assert est.err >= gaps[-1] / 4.0
    assert est.eps_ladder == [0.02 * 2.0 ** -k for k in range(6)]


def test_richardson_removes_linear_error():
    vals = [3.0 + 0.7 * e + 0.2 * e * e for e in (0.1, 0.05, 0.025, 0.0125)]
    L, err, _ = richardson(vals)
    assert L == pytest.approx(3.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 2 * math.pi), st.floats(0.3, 2 * math.pi - 0.3))
def test_disk_lengths_match_chord_formula(p, gap):
    est = renormalized_length(make_model("disk"), GeodesicSpec(p, p + gap))
    assert est.L == pytest.approx(disk_oracle(p, p + gap), abs=1e-6)


def test_small_gap(disk):
    est = renormalized_length(disk, GeodesicSpec(0.0, 0.02), eps0=1e-5)
    assert est.L == pytest.approx(2.0 * math.log(0.02), abs=1e-3)
    assert est.L == pytest.approx(-7.824, abs=1e-3)


def test_ladder_self_consistency(perturbed):
    spec = GeodesicSpec(1.0, 4.0)
    a = renormalized_length(perturbed, spec, eps0=0.02)
    b = renormalized_length(perturbed, spec, eps0=0.01)
    assert abs(a.L - b.L) < 10.0 * max(a.err, b.err)


def test_half_plane_length(half_plane):
    est = renormalized_length(half_plane, GeodesicSpec(-0.5, 1.5))
    assert est.L == pytest.approx(2.0 * math.log(2.0), abs=1e-6)


def test_cylinder_lengths(cylinder):
    # [DERIVED] between opposite ends L = 2 ln(2 cosh(l dtheta / 2)) with dtheta lifted
    values = []
    for w in range(4):
        est = renormalized_length(cylinder, GeodesicSpec(0.1, 0.3, w))
        values.append(est.L)
        assert est.L == pytest.approx(2 * math.log(2 * math.cosh(0.5 * (0.2 + w))), abs=1e-6)
    assert all(b > a for a, b in zip(values, values[1:]))


def test_extended_distance_examples(disk):
    d = extended_distance(disk, (0.0, 0.0), (0.5, 0.0)).D
    assert d == pytest.approx(math.log(3.0) + math.log(0.5) + math.log(0.375), abs=1e-12)
    assert d == pytest.approx(-0.575364, abs=1e-6)
    ends = extended_distance(disk, (1.0, 0.0), (-1.0, 0.0)).D
    assert ends == pytest.approx(2 * math.log(2.0), abs=1e-12)
    near = extended_distance(disk, (0.999999, 0.0), (-0.999999, 0.0)).D
    assert near == pytest.approx(ends, abs=1e-5)


@pytest.mark.parametrize("kind, p, q", [
    ("disk", (0.1, 0.2), (-0.4, 0.3)),
    ("half_plane", (0.0, 1.0), (2.0, 0.5)),
    ("cylinder", (0.3, 0.1), (-1.2, 0.7)),
])
def test_extended_distance_symmetric(kind, p, q):
    model = make_model(kind, {"neck_length": 1.0} if kind == "cylinder" else None)
    assert extended_distance(model, p, q).D == pytest.approx(extended_distance(model, q, p).D, abs=1e-12)


def test_extended_distance_perturbed(perturbed):
    p, q = (math.cos(0.5), math.sin(0.5)), (math.cos(3.3), math.sin(3.3))
    D = extended_distance(perturbed, p, q).D
    assert D == pytest.approx(renormalized_length(perturbed, GeodesicSpec(0.5, 3.3), 0.01).L, abs=1e-9)
    with pytest.raises(NotImplementedError):
        extended_distance(perturbed, (0.1, 0.0), (0.2, 0.0))


def test_constant_conformal_shift(disk):
    measured, predicted = conformal_shift_check(disk, GeodesicSpec(0.0, 2.0), "constant:0.5")
    assert predicted == 1.0
    assert measured == pytest.approx(1.0, abs=1e-6)


def test_zero_conformal_shift(perturbed):
    measured, predicted = conformal_shift_check(perturbed, GeodesicSpec(0.0, 2.0), "zero")
    assert predicted == 0.0 and measured == 0.0


def test_bump_conformal_shift(disk):
    measured, predicted = conformal_shift_check(disk, GeodesicSpec(0.0, 2.0), "bump:0.2,0,0.5")
    assert predicted == pytest.approx(0.2, abs=1e-12)
    assert measured == pytest.approx(0.2, abs=1e-5)


def test_mobius_fixed_points():
    measured, predicted = mobius_check(0.5, 0.0, 0.0, math.pi)
    assert predicted == pytest.approx(0.0, abs=1e-12)
    assert measured == pytest.approx(0.0, abs=1e-6)


def test_mobius_imaginary_pair():
    measured, predicted = mobius_check(0.5, 0.0, 0.5 * math.pi, 1.5 * math.pi)
    assert predicted == pytest.approx(2 * math.log(0.6), abs=1e-12)
    assert measured == pytest.approx(-1.021651, abs=1e-6)
    # image pair 0.8 +- 0.6 i
    assert 2 * math.log(abs(complex(0.8, 0.6) - complex(0.8, -0.6))) == pytest.approx(2 * math.log(1.2))


@pytest.mark.parametrize("rot", [0.0, 1.3, -2.0])
def test_rotations_preserve_length(rot):
    measured, predicted = mobius_check(0.0, rot, 0.4, 2.5)
    assert predicted == 0.0
    assert measured == pytest.approx(0.0, abs=1e-6)


def test_csv_row(disk):
    spec = GeodesicSpec(0.0, math.pi)
    est = renormalized_length(disk, spec)
    row = est.csv_row(disk, 0.02, 5).split(",")
    assert len(row) == len(CSV_HEADER.split(","))
    assert row[0] == "disk" and float(row[4]) == est.L
