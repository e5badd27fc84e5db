"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

from __future__ import annotations

import cmath
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import closed_forms as cf
from .connect import GeodesicSpec, connect
from .deviation import (ConvexTestFn, DeviationEngine, OtalParams, gauss_bonnet_defect,
                        jensen_check, superadditivity_defect, theta_profile, triangle_for,
                        CHECK_FLOOR)
from .escape import escape_profile
from .geoflow import ChartRay, PhasePoint, flow, growth_exponent, scattering
from .liouville import crossing_mass_box, crossing_mass_segment
from .renlen import conformal_shift_check, mobius_check, renormalized_length
from .surface_models import make_model

LN2 = math.log(2.0)


@dataclass
class Outcome:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f} s)"


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


_cache = {}


def _perturbed():
    if "pert" not in _cache:
        _cache["pert"] = make_model("perturbed_disk")
    return _cache["pert"]


def _profile(eps, n):
    key = ("profile", eps, n)
    if key not in _cache:
        _cache[key] = _timed(lambda: theta_profile(make_model("disk"), _perturbed(), eps, 16, n, seed=0))
    return _cache[key]


def check_disk_closed_form():
    disk = make_model("disk")
    ok = True
    parts = []
    for q, exact in ((math.pi, 2 * LN2), (math.pi / 2, LN2)):
        est, secs = _timed(lambda: renormalized_length(disk, GeodesicSpec(0.0, q)))
        err = abs(est.L - exact)
        ok &= err < 1e-6 and secs < 5.0
        parts.append(f"|L-exact|={err:.1e} in {secs:.2f}s")
    return ok, "; ".join(parts)


def check_half_plane():
    est = renormalized_length(make_model("half_plane"), GeodesicSpec(0.0, 3.0))
    err = abs(est.L - 2 * math.log(3.0))
    return err < 1e-5, f"|L-2ln3|={err:.1e}"


def check_eps_rate():
    disk = make_model("disk")
    ok = True
    parts = []
    for eps in (0.02, 0.01, 0.005):
        est = renormalized_length(disk, GeodesicSpec(0.0, math.pi), eps, 1)
        ratio = abs(est.L_eps[0] - 2 * LN2) / eps
        ok &= 1.5 <= ratio <= 2.5
        parts.append(f"eps={eps}: {ratio:.4f} eps")
    return ok, ", ".join(parts)


def check_conformal_law():
    disk = make_model("disk")
    spec = GeodesicSpec(0.0, 2.0)
    m1, p1 = conformal_shift_check(disk, spec, "constant:0.5")
    m2, p2 = conformal_shift_check(disk, spec, "bump:0.2,0,0.5")
    e1, e2 = abs(m1 - 1.0), abs(m2 - p2)
    return e1 < 1e-5 and e2 < 1e-4 and p1 == 1.0, f"constant err {e1:.1e}; bump err {e2:.1e}"


def check_mobius():
    measured, predicted = mobius_check(0.5, 0.0, math.pi / 2, -math.pi / 2)
    err = abs(measured - 2 * math.log(0.6))
    return err < 1e-5 and abs(predicted - 2 * math.log(0.6)) < 1e-12, f"|dL-2ln0.6|={err:.1e}"


def check_liouville():
    disk = make_model("disk")
    seg = crossing_mass_segment(disk, (0.0, 0.0), (math.tanh(0.5), 0.0), "quadrature")
    e_seg = abs(seg.value - 2.0)
    box = crossing_mass_box(disk, (0.0, math.pi / 2), (math.pi, 1.5 * math.pi))
    e_box = abs(box.value - 2 * LN2)
    whole = crossing_mass_box(disk, (0.0, 1.0), (2.5, 4.0)).value
    split = crossing_mass_box(disk, (0.0, 0.4), (2.5, 4.0)).value + \
        crossing_mass_box(disk, (0.4, 1.0), (2.5, 4.0)).value
    e_add = abs(whole - split)
    ok = e_seg < 1e-8 and e_box < 2 * box.err and e_add < 1e-6
    return ok, f"segment {e_seg:.1e}; box {e_box:.1e} (2 err = {2 * box.err:.1e}); additivity {e_add:.1e}"


def _exit_gap(a: PhasePoint, b: PhasePoint) -> float:
    dy = (a.y - b.y + math.pi) % (2 * math.pi) - math.pi
    return max(abs(dy), abs(a.eta - b.eta))


def check_scattering():
    disk = make_model("disk")
    pert = _perturbed()
    ch, rh = cf.hyperbolic_disk_of(complex(pert.bump.cx, pert.bump.cy), pert.bump.radius)
    rng = np.random.default_rng(11)
    miss = []
    while len(miss) < 100:
        p, gap = rng.uniform(0, 2 * math.pi), rng.uniform(0.05, 2 * math.pi - 0.05)
        if cf.geodesic_clears_disk(cmath.exp(1j * p), cmath.exp(1j * (p + gap)), ch, rh, 0.05):
            miss.append((p, gap))
    worst_miss = 0.0
    for p, gap in miss:
        z = PhasePoint(0.0, p, 1.0, 1.0 / math.tan(0.5 * gap))
        worst_miss = max(worst_miss, _exit_gap(scattering(disk, z), scattering(pert, z)))
    least_hit = math.inf
    for k in range(10):
        p = 2 * math.pi * k / 10
        z = PhasePoint(0.0, p, 1.0, 1.0 / math.tan(0.5 * (math.pi + 0.1 * (k - 5) / 5)))
        least_hit = min(least_hit, _exit_gap(scattering(disk, z), scattering(pert, z)))
    ok = worst_miss < 1e-8 and least_hit > 1e-4
    return ok, f"missing rays max gap {worst_miss:.1e}; bump rays min gap {least_hit:.1e}"


def check_deviation_identity():
    disk = make_model("disk")
    engine = DeviationEngine(disk, disk, numeric=True)
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        r, a = 0.8 * math.sqrt(rng.random()), rng.uniform(0, 2 * math.pi)
        base = ChartRay((r * math.cos(a), r * math.sin(a)), rng.uniform(0, 2 * math.pi))
        th = rng.uniform(0.05, math.pi - 0.05)
        worst = max(worst, abs(engine.sample(base, th).f - th))
        engine.clear_cache()
    return worst < 1e-6, f"max |f-theta| over 1000 numeric samples {worst:.1e}"


def check_gauss_bonnet():
    disk = make_model("disk")
    pert = _perturbed()
    engine = DeviationEngine(disk, pert)
    rng = np.random.default_rng(9)
    worst_id = 0.0
    min_defect = math.inf
    for _ in range(20):
        r, a = 0.5 * math.sqrt(rng.random()), rng.uniform(0, 2 * math.pi)
        base = ChartRay((r * math.cos(a), r * math.sin(a)), rng.uniform(0, 2 * math.pi))
        t1, t2 = rng.uniform(0.2, 1.4, 2)
        sup = superadditivity_defect(engine, base, t1, t2)
        defect, integral = gauss_bonnet_defect(pert, triangle_for(engine, base, t1, t2))
        worst_id = max(worst_id, abs(sup + integral), abs(defect + integral))
        min_defect = min(min_defect, sup)
    # large triangles over the bump, straight from boundary endpoints
    worst_big = 0.0
    max_defect = 0.0
    for _ in range(20):
        x = np.sort(rng.uniform(0, 2 * math.pi, 6))
        sides = [(x[0], x[3]), (x[2], x[5]), (x[4], x[1])]
        tr = [connect(pert, GeodesicSpec(p, q))[1] for p, q in sides]
        defect, integral = gauss_bonnet_defect(pert, tr)
        worst_big = max(worst_big, abs(defect + integral))
        max_defect = max(max_defect, defect)
        min_defect = min(min_defect, defect)
    ok = worst_id < 1e-4 and worst_big < 1e-4 and min_defect >= -1e-6
    return ok, (f"superadditivity vs -int kappa {worst_id:.1e}; large triangles {worst_big:.1e} "
                f"(largest defect {max_defect:.3f}); min defect {min_defect:.1e}")


def _within(value, se, k=3.0):
    return abs(value) <= k * se + CHECK_FLOOR


def check_theta_properties():
    prof, secs = _profile(0.02, 100_000)
    ends = prof.endpoint_checks()
    ok_end = all(_within(v, se) for v, se in ends.values())
    sym = prof.pi_symmetry()
    ok_sym = all(_within(v, se) for v, se in sym)
    sup = prof.superadditivity()
    ok_sup = all(v <= 3.0 * se + CHECK_FLOOR for _, _, v, se in sup)
    worst_sym = max(abs(v) / (se + CHECK_FLOOR) for v, se in sym)
    worst_sup = max(v / (se + CHECK_FLOOR) for _, _, v, se in sup)
    worst_end = max(abs(v) / (se + CHECK_FLOOR) for v, se in ends.values())
    ok = ok_end and ok_sym and ok_sup and secs < 120.0
    return ok, (f"endpoints {worst_end:.2f} se, pi-symmetry {worst_sym:.2f} se, "
                f"superadditivity {worst_sup:.2f} se; sampling took {secs:.1f} s")


def check_jensen():
    J = ConvexTestFn("abs_hinge", 1.0, math.pi / 2)
    ok = True
    parts = []
    for eps, n in ((0.05, 50_000), (0.02, 100_000)):
        prof, _ = _profile(eps, n)
        lhs, rhs, slack, se = jensen_check(prof, J)
        ok &= slack >= -(3.0 * se + 1e-4)
        parts.append(f"eps={eps}: slack {slack:.2e} (se {se:.1e})")
    return ok, "; ".join(parts)


def check_otal_exponent():
    g1 = OtalParams(0.0, 1.0, 0.0).gamma_hat
    g2 = OtalParams(1.0, 0.5, 0.1).gamma_hat
    return g1 == 1.0 / 3.0 and g2 == 0.32, f"gamma_hat = {g1!r}, {g2!r}"


def check_escape():
    disk = make_model("disk")
    cyl = make_model("cylinder", {"neck_length": 1.0})
    v = escape_profile(disk, 0.1, [0.0, 20.0], 100_000, seed=1).V[1]
    (a, b), secs = _timed(lambda: (escape_profile(cyl, 0.1, n_samples=100_000, seed=1),
                                   escape_profile(cyl, 0.05, n_samples=100_000, seed=2)))
    rel = abs(a.Q - b.Q) / abs(a.Q)
    ok = v == 0.0 and a.Q < -0.05 and rel <= 0.10 and secs < 120.0
    return ok, f"disk V(20)={v}; Q(0.1)={a.Q:.4f}, Q(0.05)={b.Q:.4f} (rel {rel:.3f}) in {secs:.1f} s"


def check_jacobi():
    disk = make_model("disk")
    traj = flow(disk, ChartRay((0.0, 0.0), 0.0), "physical", 1.0, t_eval=[1.0], record=False,
                jacobi=(0.0, 1.0))
    j1 = float(traj.records[-1, 10])
    err = abs(j1 - math.sinh(1.0))
    k = growth_exponent(_perturbed(), ChartRay((0.0, 0.0), 0.3), t_end=3.0, t_fit=1.0)
    return err < 1e-8 and k <= 1.05, f"|j(1)-sinh 1|={err:.1e}; growth exponent {k:.4f}"


CRITERIA = [
    (1, "disk closed form", check_disk_closed_form),
    (2, "half-plane length", check_half_plane),
    (3, "eps approach rate", check_eps_rate),
    (4, "conformal change law", check_conformal_law),
    (5, "Mobius law", check_mobius),
    (6, "Liouville current", check_liouville),
    (7, "scattering detects the bump", check_scattering),
    (8, "deviation identity", check_deviation_identity),
    (9, "Gauss-Bonnet identity", check_gauss_bonnet),
    (10, "Theta properties", check_theta_properties),
    (11, "Jensen inequality", check_jensen),
    (12, "critical exponent", check_otal_exponent),
    (13, "escape rate", check_escape),
    (14, "Jacobi growth", check_jacobi),
]


def run_one(number: int) -> Outcome:
    num, name, fn = CRITERIA[number - 1]
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crash is a failed criterion, reported as such
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    return Outcome(num, name, bool(passed), detail, time.perf_counter() - t0)


def run_all(only=None, stream=None) -> list[Outcome]:
    stream = stream if stream is not None else sys.stdout
    numbers = list(only) if only else [c[0] for c in CRITERIA]
    out = []
    for n in numbers:
        res = run_one(n)
        print(res.line(), file=stream, flush=True)
        out.append(res)
    return out
