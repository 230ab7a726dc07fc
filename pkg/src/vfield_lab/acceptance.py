"""Exit criteria of the package, runnable from tests and from ``vfield-lab verify``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import curvature as cv
from .index import index_pair
from .loxodrome import make_loxodromic_field, make_test_field, random_smooth_field, trace_rhumb
from .sphere_core import HALF_PI, SphericalPoint
from .varmin import ThetaGrid, grid_gradient, minimize
from .volume import (
    flat_density,
    lower_bound_s2,
    lower_bound_s3,
    sharpness_residuals,
    volume_density,
    volume_density_extrinsic,
    volume_total,
)

TWO_PI_SQ = 2.0 * math.pi**2
LOXODROMIC_ANGLES = (0.0, math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2)
PROBES = (0.3, 0.8, 1.3)
SAMPLE_PHI_MAX = 1.4


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.metrics.items())
        return f"[{status}] criterion {self.number}: {self.title} ({shown}; {self.seconds:.2f}s)"

    def to_dict(self):
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "metrics": self.metrics, "seconds": self.seconds}


def _short(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _random_points(rng, n, phi_max=SAMPLE_PHI_MAX):
    return rng.uniform(-phi_max, phi_max, n), rng.uniform(0.0, 2.0 * math.pi, n)


def loxodromic_volume(seed=0, quick=False) -> CriterionResult:
    worst_total = worst_hemi = worst_time = 0.0
    for t0 in LOXODROMIC_ANGLES:
        start = time.perf_counter()
        rep = volume_total(make_loxodromic_field(t0))
        worst_time = max(worst_time, time.perf_counter() - start)
        worst_total = max(worst_total, abs(rep.total - TWO_PI_SQ) / TWO_PI_SQ)
        worst_hemi = max(worst_hemi, abs(rep.north.value - math.pi**2), abs(rep.south.value - math.pi**2))
    ok = worst_total < 1e-6 and worst_hemi < 1e-6 and worst_time < 5.0
    return CriterionResult(1, "loxodromic volume = 2 pi^2, hemispheres = pi^2", ok,
                           {"max_rel_err_total": worst_total, "max_abs_err_hemisphere": worst_hemi,
                            "max_seconds_per_field": worst_time})


def floor_property(seed=0, quick=False) -> CriterionResult:
    rep = volume_total(make_test_field(0, 0.3, 1), density=flat_density)
    err = abs(rep.total - 4.0 * math.pi)
    return CriterionResult(2, "flat integrand integrates to 4 pi", err < 1e-8, {"abs_err": err})


def curvature_oracle(seed=0, quick=False) -> CriterionResult:
    rng = np.random.default_rng(seed)
    n = 200 if quick else 1000
    worst = 0.0
    for _ in range(n):
        f = random_smooth_field(rng)
        phi, lam = _random_points(rng, 1)
        k_c, t_c = cv.curvature_arrays(f, phi, lam)
        k_e, t_e = cv.curvature_extrinsic_arrays(f, phi, lam)
        worst = max(worst, float(np.max(np.abs(k_c - k_e))), float(np.max(np.abs(t_c - t_e))))
    ident = 0.0
    phi, lam = _random_points(rng, 2000)
    for t0 in LOXODROMIC_ANGLES + (2.0, -1.0):
        k, t = cv.curvature_arrays(make_loxodromic_field(t0), phi, lam)
        ident = max(ident, float(np.max(np.abs(np.hypot(k, t) - np.abs(np.tan(phi))))))
    ok = worst < 1e-6 and ident < 1e-10
    return CriterionResult(3, "closed-form vs extrinsic curvatures", ok,
                           {"samples": n, "max_abs_diff": worst, "constant_theta_identity_err": ident,
                            "sign": cv.PARALLEL_CURVATURE_SIGN})


def sharpness(seed=0, quick=False) -> CriterionResult:
    sup_lox = 0.0
    for t0 in LOXODROMIC_ANGLES:
        r = sharpness_residuals(make_loxodromic_field(t0))
        sup_lox = max(sup_lox, r.sup_i, r.sup_ii)
    pert = make_test_field(0, 0.3, 1, theta0=HALF_PI, phase=-HALF_PI)  # pi/2 + 0.3 sin(lam)
    r = sharpness_residuals(pert)
    vol = volume_total(pert).total
    ok = sup_lox < 1e-10 and r.sup_i > 0.01 and vol > TWO_PI_SQ + 0.01
    return CriterionResult(4, "sharpness residuals", ok,
                           {"loxodromic_sup": sup_lox, "perturbed_sup_i": r.sup_i,
                            "perturbed_volume_excess": vol - TWO_PI_SQ})


def _both_methods(f, probe):
    w = index_pair(f, "winding", probe)
    c = index_pair(f, "connection-form", probe)
    return w, c


def indices(seed=0, quick=False) -> CriterionResult:
    rng = np.random.default_rng(seed + 1)
    lox_ok = True
    for t0 in LOXODROMIC_ANGLES:
        for probe in PROBES:
            for pair in _both_methods(make_loxodromic_field(t0), probe):
                lox_ok &= (pair[0].index, pair[1].index) == (1, 1) and pair[0].reliable and pair[1].reliable
    n = 10 if quick else 50
    agree = sums = stable = True
    for _ in range(n):
        f = random_smooth_field(rng)
        seen = set()
        for probe in PROBES:
            w, c = _both_methods(f, probe)
            agree &= (w[0].index, w[1].index) == (c[0].index, c[1].index)
            sums &= w[0].index + w[1].index == 2 and c[0].index + c[1].index == 2
            seen.add((w[0].index, w[1].index))
        stable &= len(seen) == 1
    ok = lox_ok and agree and sums and stable
    return CriterionResult(5, "Poincare indices", ok,
                           {"loxodromic_1_1": lox_ok, "methods_agree": agree, "sum_is_2": sums,
                            "probe_stable": stable, "random_fields": n})


def bound_consistency(seed=0, quick=False) -> CriterionResult:
    rng = np.random.default_rng(seed + 2)
    fields = [make_loxodromic_field(t0) for t0 in LOXODROMIC_ANGLES]
    fields += [make_test_field(k, a, m) for k in (-1, 0, 1, 2) for a in (0.0, 0.3) for m in (1, 2)]
    fields += [random_smooth_field(rng) for _ in range(3 if quick else 8)]
    worst_margin = math.inf
    for f in fields:
        n, s = index_pair(f, "winding")
        margin = volume_total(f, estimate_error=False).total - lower_bound_s2(n.index, s.index)
        worst_margin = min(worst_margin, margin)
    exact_s2 = lower_bound_s2(1, 1) == TWO_PI_SQ
    exact_s3 = lower_bound_s3(1, 1) == 4.0 * math.pi**2
    ok = worst_margin >= -1e-4 and exact_s2 and exact_s3
    return CriterionResult(6, "volume above the index lower bound", ok,
                           {"fields": len(fields), "min_margin": worst_margin,
                            "s2_bound_exact": exact_s2, "s3_bound_exact": exact_s3})


def minimiser_witness(seed=0, quick=False) -> CriterionResult:
    start = time.perf_counter()
    grid0 = ThetaGrid.from_field(make_test_field(0, 0.3, 1, theta0=HALF_PI), 64, 128)
    rep = minimize(grid0)
    lox = ThetaGrid.from_field(make_loxodromic_field(math.pi / 3), 64, 128)
    fixed = float(np.max(np.abs(grid_gradient(lox))))
    elapsed = time.perf_counter() - start
    audit = rep.audit_volume if rep.audit_volume is not None else math.nan
    ok = (rep.converged and abs(rep.final_volume - TWO_PI_SQ) < 1e-3 and rep.loxodromy_defect < 1e-3
          and abs(audit - TWO_PI_SQ) < 1e-3 and rep.audit_discrepancy is not None
          and rep.audit_discrepancy < 1e-4 and fixed < 1e-8 and elapsed < 120.0)
    return CriterionResult(7, "minimiser is loxodromic", ok,
                           {"status": rep.status, "iterations": rep.iterations,
                            "volume_err": abs(rep.final_volume - TWO_PI_SQ), "defect": rep.loxodromy_defect,
                            "audit_err": abs(audit - TWO_PI_SQ), "fixed_point_grad": fixed,
                            "seconds_total": elapsed})


def rhumb(seed=0, quick=False) -> CriterionResult:
    t0 = math.pi / 4
    tr = trace_rhumb(t0, SphericalPoint(0.0, 0.0), 1.0)
    phi1 = tr.phi[-1]
    merc = abs(tr.lam[-1] - math.log(1.0 / math.cos(phi1) + math.tan(phi1)))
    lat = abs(phi1 - math.sin(t0))
    full = trace_rhumb(t0, SphericalPoint(0.0, 0.0), 100.0)
    length_err = abs(full.length_to_pole - HALF_PI / math.sin(t0)) if full.length_to_pole else math.inf
    angle_err = max(float(np.max(np.abs(tr.crossing_angles() - t0))),
                    float(np.max(np.abs(full.crossing_angles() - t0))))
    ok = merc < 1e-8 and lat < 1e-8 and length_err < 1e-6 and angle_err < 1e-8 and full.reason == "pole"
    return CriterionResult(8, "rhumb-line tracing", ok,
                           {"mercator_err": merc, "latitude_err": lat, "length_err": length_err,
                            "angle_err": angle_err})


def volume_equivalence(seed=0, quick=False) -> CriterionResult:
    rng = np.random.default_rng(seed + 3)
    n = 200 if quick else 1000
    worst = 0.0
    for _ in range(n):
        f = random_smooth_field(rng)
        phi, lam = _random_points(rng, 1)
        worst = max(worst, float(np.max(np.abs(volume_density(f, phi, lam) - volume_density_extrinsic(f, phi, lam)))))
    return CriterionResult(9, "extrinsic and curvature volume densities agree", worst < 1e-6,
                           {"samples": n, "max_abs_diff": worst})


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: loxodromic_volume,
    2: floor_property,
    3: curvature_oracle,
    4: sharpness,
    5: indices,
    6: bound_consistency,
    7: minimiser_witness,
    8: rhumb,
    9: volume_equivalence,
}


def run_criterion(number: int, seed: int = 0, quick: bool = False) -> CriterionResult:
    start = time.perf_counter()
    result = CRITERIA[number](seed=seed, quick=quick)
    result.seconds = time.perf_counter() - start
    return result


def run_all(seed: int = 0, quick: bool = False):
    return [run_criterion(k, seed, quick) for k in sorted(CRITERIA)]
