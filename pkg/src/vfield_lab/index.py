"""Poincare indices of a unit field at the punctures N and S.

Two independent routes:

* winding: push the field into the azimuthal equidistant chart centred at the
  pole and count the turns of the planar vector around a probe parallel;
* connection form: integrate ``omega12`` along the probe parallel and close the
  polar cap with Gauss-Bonnet (the cap has Gaussian curvature 1, so its total
  curvature is its area).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curvature import PARALLEL_CURVATURE_SIGN, omega12_on_parallel
from .errors import ConvergenceError
from .sphere_core import HALF_PI, TWO_PI, AngleField, embed_arrays, field_vectors, geodesic_point

DEFAULT_SAMPLES = 4096
MAX_SAMPLES = 2**18
RELIABLE_RESIDUAL = 0.1
# Largest per-sample angle increment accepted before refining the probe.
_MAX_STEP_ANGLE = 0.5 * math.pi
_CHART_STEP = 1e-6


@dataclass(frozen=True)
class IndexReport:
    pole: str
    method: str
    index: int
    raw: float
    residual: float
    probe_phi: float
    samples: int

    @property
    def reliable(self) -> bool:
        return self.residual < RELIABLE_RESIDUAL

    def to_dict(self):
        return {
            "pole": self.pole,
            "method": self.method,
            "raw": self.raw,
            "index": self.index,
            "residual": self.residual,
            "probe_phi": self.probe_phi,
            "samples": self.samples,
            "reliable": self.reliable,
        }


def _check_probe(pole, phi_probe):
    if pole not in ("N", "S"):
        raise ValueError(f"pole must be 'N' or 'S', got {pole!r}")
    if not abs(phi_probe) < HALF_PI:
        raise ValueError("probe latitude must lie strictly between the poles")
    if (pole == "N" and phi_probe < 0.0) or (pole == "S" and phi_probe > 0.0):
        raise ValueError(f"probe latitude {phi_probe} is not on the {pole} side")


def azimuthal_chart(xyz, pole: str):
    """Azimuthal equidistant coordinates centred at ``pole``, orientation preserving."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    rho = np.hypot(x, y)
    if pole == "N":
        colat = np.arctan2(rho, z)
        return np.stack([colat * x / rho, colat * y / rho], axis=-1)
    # seen from outside at S the outward normal is -z, so flip y
    colat = np.arctan2(rho, -z)
    return np.stack([colat * x / rho, -colat * y / rho], axis=-1)


def chart_field_angles(field: AngleField, pole: str, phi_probe: float, samples: int) -> np.ndarray:
    """Polar angle of the chart image of ``v`` at equally spaced probe points.

    The pushforward is the central difference of the chart along the great
    circle leaving each point in the direction of ``v``.
    """
    lam = TWO_PI * np.arange(samples) / samples
    phi = np.full_like(lam, phi_probe)
    p = embed_arrays(phi, lam)
    v, _ = field_vectors(field, phi, lam)
    h = _CHART_STEP
    w = (azimuthal_chart(geodesic_point(p, v, h), pole) - azimuthal_chart(geodesic_point(p, v, -h), pole)) / (2 * h)
    return np.arctan2(w[:, 1], w[:, 0])


def chart_loop_sense(pole: str, phi_probe: float) -> int:
    """+1 if increasing longitude runs counterclockwise around the pole in its chart."""
    lam = np.array([0.0, 0.5 * math.pi])
    q = azimuthal_chart(embed_arrays(np.full(2, phi_probe), lam), pole)
    return 1 if q[0, 0] * q[1, 1] - q[0, 1] * q[1, 0] > 0 else -1


def winding_of_angles(angles: np.ndarray):
    """Total unwrapped turning of a closed sequence of angles, and the largest step."""
    steps = np.diff(np.append(angles, angles[0]))
    steps = (steps + math.pi) % TWO_PI - math.pi
    return float(np.sum(steps)) / TWO_PI, float(np.max(np.abs(steps)))


def _finish(pole, method, raw, phi_probe, samples):
    raw = float(raw) + 0.0
    index = int(round(raw))
    return IndexReport(pole, method, index, raw, abs(raw - index), phi_probe, samples)


def index_by_winding(field: AngleField, pole: str, phi_probe: float, samples: int = DEFAULT_SAMPLES,
                     max_samples: int = MAX_SAMPLES) -> IndexReport:
    _check_probe(pole, phi_probe)
    sense = chart_loop_sense(pole, phi_probe)
    while True:
        turns, biggest = winding_of_angles(chart_field_angles(field, pole, phi_probe, samples))
        report = _finish(pole, "winding", sense * turns, phi_probe, samples)
        if (report.reliable and biggest < _MAX_STEP_ANGLE) or samples >= max_samples:
            return report
        samples *= 2


def index_by_connection_form(field: AngleField, pole: str, phi_probe: float, samples: int = DEFAULT_SAMPLES,
                             max_samples: int = MAX_SAMPLES, sign: int = PARALLEL_CURVATURE_SIGN) -> IndexReport:
    """Index from the line integral of ``omega12`` along the probe parallel.

    ``omega12(X) = g(nabla_X v, v_perp)`` and ``v_perp`` lies clockwise of ``v``,
    so ``-omega12(T)`` is the counterclockwise turning of ``v`` against parallel
    transport along the positively oriented cap boundary ``T``.  Adding the
    cap's total curvature gives ``2 pi`` times the index.
    """
    _check_probe(pole, phi_probe)
    while True:
        lam = TWO_PI * np.arange(samples) / samples
        phi = np.full_like(lam, phi_probe)
        # periodic trapezoid rule with the length element cos(phi) dlam
        line_u = float(np.sum(omega12_on_parallel(field, phi, lam, sign))) * math.cos(phi_probe) * TWO_PI / samples
        if pole == "N":
            # cap lies to the left of u
            turning = -line_u
            cap = TWO_PI * (1.0 - math.sin(phi_probe))
        else:
            # cap lies to the left of -u
            turning = line_u
            cap = TWO_PI * (1.0 + math.sin(phi_probe))
        report = _finish(pole, "connection-form", (turning + cap) / TWO_PI, phi_probe, samples)
        if report.reliable or samples >= max_samples:
            return report
        samples *= 2


METHODS = {"winding": index_by_winding, "connection-form": index_by_connection_form}


def index_pair(field: AngleField, method: str = "winding", phi_probe: float = 0.8, strict: bool = False, **kw):
    """Reports at N (probe ``+phi_probe``) and S (probe ``-phi_probe``)."""
    fn = METHODS[method]
    north = fn(field, "N", abs(phi_probe), **kw)
    south = fn(field, "S", -abs(phi_probe), **kw)
    if strict and not (north.reliable and south.reliable):
        raise ConvergenceError(f"unreliable {method} index (residuals {north.residual:.3g}, {south.residual:.3g})")
    return north, south
