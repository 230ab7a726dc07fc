"""Volume of a unit field on the punctured sphere.

The density is ``sqrt(1 + kappa^2 + tau^2)`` against the area form
``cos(phi) dphi dlam``.  Bands are integrated with Gauss-Legendre in latitude
and the periodic trapezoid rule in longitude.  Bands reaching a pole are cut at
``pi/2 - eps`` for several ``eps`` and extrapolated to ``eps = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .curvature import PARALLEL_CURVATURE_SIGN, covariant_derivative_fd, curvature_arrays
from .errors import ConvergenceError
from .sphere_core import (
    DEFAULT_FD_STEP,
    HALF_PI,
    TWO_PI,
    AngleField,
    SphericalPoint,
    embed_arrays,
    field_vectors,
    meridian_tangent,
    parallel_tangent,
    unembed_arrays,
)

DEFAULT_EPSILONS = (1e-2, 1e-3, 1e-4)
DEFAULT_N_PHI = 256
DEFAULT_N_LAMBDA = 512
DEFAULT_RTOL = 1e-6
SHARPNESS_CLIP = 1e-3

SPHERE_AREA = 4.0 * math.pi
S3_VOLUME = 2.0 * math.pi**2


def volume_density(field: AngleField, phi, lam, sign: int = PARALLEL_CURVATURE_SIGN):
    kappa, tau = curvature_arrays(field, phi, lam, sign)
    return np.sqrt(1.0 + kappa * kappa + tau * tau)


def flat_density(field: AngleField, phi, lam):
    """The density with kappa and tau forced to zero (a parallel field)."""
    return np.ones(np.broadcast(np.asarray(phi), np.asarray(lam)).shape)


def volume_integrand(field: AngleField, point: SphericalPoint) -> float:
    return float(volume_density(field, point.phi, point.lam))


def volume_density_extrinsic(field: AngleField, phi, lam, h: float = DEFAULT_FD_STEP):
    """``sqrt(1 + |nabla_u v|^2 + |nabla_n v|^2)`` with covariant derivatives taken in R^3.

    Uses the coordinate frame ``(u, n)``, not ``(v_perp, v)``, and never touches
    the curvature formulas.
    """
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    p = embed_arrays(phi, lam)

    def v_at(xyz, lam_ref):
        ph, la = unembed_arrays(xyz, lam_ref)
        v, _ = field_vectors(field, ph, la)
        return v

    du = covariant_derivative_fd(v_at, p, parallel_tangent(phi, lam), h, lam)
    dn = covariant_derivative_fd(v_at, p, meridian_tangent(phi, lam), h, lam)
    return np.sqrt(1.0 + np.sum(du * du, axis=-1) + np.sum(dn * dn, axis=-1))


@dataclass(frozen=True)
class IntegrationDomain:
    phi_min: float
    phi_max: float
    epsilons: Sequence[float] = DEFAULT_EPSILONS
    n_phi: int = DEFAULT_N_PHI
    n_lambda: int = DEFAULT_N_LAMBDA

    def __post_init__(self):
        if not self.phi_min < self.phi_max:
            raise ValueError("phi_min must be below phi_max")
        if self.phi_min < -HALF_PI or self.phi_max > HALF_PI:
            raise ValueError("band must lie within [-pi/2, pi/2]")
        if any(e <= 0.0 for e in self.epsilons) or len(self.epsilons) == 0:
            raise ValueError("pole cutoffs must be positive")
        if self.n_phi < 4 or self.n_lambda < 4:
            raise ValueError("quadrature resolution must be at least 4")

    def doubled(self) -> "IntegrationDomain":
        return IntegrationDomain(self.phi_min, self.phi_max, self.epsilons, 2 * self.n_phi, 2 * self.n_lambda)


@dataclass
class BandResult:
    value: float
    error_estimate: float
    converged: bool
    phi_min: float
    phi_max: float
    cutoff_values: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "value": self.value,
            "error_estimate": self.error_estimate,
            "converged": self.converged,
            "phi_min": self.phi_min,
            "phi_max": self.phi_max,
        }


def _band_sum(field, density, a, b, n_phi, n_lambda):
    x, w = np.polynomial.legendre.leggauss(n_phi)
    phi = 0.5 * (b - a) * x + 0.5 * (b + a)
    w = 0.5 * (b - a) * w
    lam = TWO_PI * np.arange(n_lambda) / n_lambda
    P, L = np.meshgrid(phi, lam, indexing="ij")
    vals = density(field, P, L) * np.cos(P)
    # mean over longitude is the periodic trapezoid rule; np.sum reduces pairwise
    ring = TWO_PI * np.sum(vals, axis=1) / n_lambda
    return float(np.sum(w * ring))


def _extrapolate_to_zero(eps, values):
    """Value at eps = 0 of the interpolating polynomial through ``(eps, values)``."""
    eps = list(eps)
    total = 0.0
    for i, (ei, vi) in enumerate(zip(eps, values)):
        weight = 1.0
        for j, ej in enumerate(eps):
            if j != i:
                weight *= ej / (ej - ei)
        total += weight * vi
    return total


def _band_value(field, density, dom: IntegrationDomain):
    """Extrapolated band value and the extrapolation error estimate."""
    lo_pole = dom.phi_min <= -HALF_PI + max(dom.epsilons)
    hi_pole = dom.phi_max >= HALF_PI - max(dom.epsilons)
    if not (lo_pole or hi_pole):
        v = _band_sum(field, density, dom.phi_min, dom.phi_max, dom.n_phi, dom.n_lambda)
        return v, 0.0, {0.0: v}
    cut = {}
    for e in dom.epsilons:
        a = max(dom.phi_min, -HALF_PI + e) if lo_pole else dom.phi_min
        b = min(dom.phi_max, HALF_PI - e) if hi_pole else dom.phi_max
        cut[e] = _band_sum(field, density, a, b, dom.n_phi, dom.n_lambda)
    eps = sorted(cut)
    vals = [cut[e] for e in eps]
    value = _extrapolate_to_zero(eps, vals)
    if len(eps) > 1:
        fewer = _extrapolate_to_zero(eps[:-1], vals[:-1])
        extrap_err = abs(value - fewer)
    else:
        extrap_err = abs(vals[0])
    return value, extrap_err, cut


def volume_band(field: AngleField, domain: IntegrationDomain, density: Callable = volume_density,
                rtol: float = DEFAULT_RTOL, estimate_error: bool = True) -> BandResult:
    """Integral of ``density * cos(phi)`` over the band, with a convergence report.

    The error estimate is the change under doubling both resolutions plus the
    change from dropping the largest cutoff in the extrapolation.
    """
    value, extrap_err, cut = _band_value(field, density, domain)
    err = extrap_err
    if estimate_error:
        fine, _, _ = _band_value(field, density, domain.doubled())
        err += abs(fine - value)
    converged = bool(np.isfinite(value) and err <= rtol * max(1.0, abs(value)))
    return BandResult(value, err, converged, domain.phi_min, domain.phi_max, cut)


@dataclass
class VolumeReport:
    total: float
    error_estimate: float
    north: BandResult
    south: BandResult
    converged: bool

    def to_dict(self):
        return {
            "volume": self.total,
            "error_estimate": self.error_estimate,
            "converged": self.converged,
            "per_hemisphere": {"north": self.north.value, "south": self.south.value},
        }


def volume_total(field: AngleField, n_phi: int = DEFAULT_N_PHI, n_lambda: int = DEFAULT_N_LAMBDA,
                 epsilons: Sequence[float] = DEFAULT_EPSILONS, density: Callable = volume_density,
                 rtol: float = DEFAULT_RTOL, estimate_error: bool = True, strict: bool = False) -> VolumeReport:
    north = volume_band(field, IntegrationDomain(0.0, HALF_PI, tuple(epsilons), n_phi, n_lambda), density, rtol, estimate_error)
    south = volume_band(field, IntegrationDomain(-HALF_PI, 0.0, tuple(epsilons), n_phi, n_lambda), density, rtol, estimate_error)
    report = VolumeReport(
        north.value + south.value,
        north.error_estimate + south.error_estimate,
        north,
        south,
        north.converged and south.converged,
    )
    if strict and not report.converged:
        raise ConvergenceError(f"volume quadrature did not converge (error estimate {report.error_estimate:.3g})")
    return report


def lower_bound_s2(index_n: int, index_s: int) -> float:
    """``(pi + |I_N| + |I_S| - 2) / 2 * area(S^2)``."""
    return 0.5 * (math.pi + abs(index_n) + abs(index_s) - 2) * SPHERE_AREA


def lower_bound_s3(index_n: int, index_s: int) -> float:
    """``(|I_N| + |I_S|) * vol(S^3)``."""
    return (abs(index_n) + abs(index_s)) * S3_VOLUME


@dataclass
class SharpnessResidual:
    res_i: np.ndarray
    res_ii: np.ndarray
    phi: np.ndarray
    lam: np.ndarray

    @property
    def sup_i(self) -> float:
        return float(np.max(self.res_i))

    @property
    def sup_ii(self) -> float:
        return float(np.max(self.res_ii))

    def to_dict(self):
        return {"sup_i": self.sup_i, "sup_ii": self.sup_ii}


def sharpness_grid(n_phi: int = 181, n_lambda: int = 360, clip: float = SHARPNESS_CLIP):
    """Uniform latitude-longitude sample grid clipped away from the poles."""
    phi = np.clip(np.linspace(-HALF_PI, HALF_PI, n_phi), -HALF_PI + clip, HALF_PI - clip)
    lam = TWO_PI * np.arange(n_lambda) / n_lambda
    return np.meshgrid(phi, lam, indexing="ij")


def sharpness_residuals(field: AngleField, sample_grid=None, sign: int = PARALLEL_CURVATURE_SIGN) -> SharpnessResidual:
    """Pointwise residuals of ``|sin phi| = sqrt(k^2 + t^2) cos phi`` and ``k sin th = t cos th``."""
    phi, lam = sharpness_grid() if sample_grid is None else sample_grid
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    kappa, tau = curvature_arrays(field, phi, lam, sign)
    th = field(phi, lam)
    res_i = np.abs(np.abs(np.sin(phi)) - np.hypot(kappa, tau) * np.cos(phi))
    res_ii = np.abs(kappa * np.sin(th) - tau * np.cos(th))
    return SharpnessResidual(res_i, res_ii, phi, lam)


def latitude_profile(field: AngleField, n_phi: int = 181, n_lambda: int = 512,
                     clip: float = SHARPNESS_CLIP, density: Callable = volume_density):
    """Per-parallel volume ``cos(phi) * int density dlam`` on a latitude grid."""
    phi = np.linspace(-HALF_PI + clip, HALF_PI - clip, n_phi)
    lam = TWO_PI * np.arange(n_lambda) / n_lambda
    P, L = np.meshgrid(phi, lam, indexing="ij")
    ring = TWO_PI * np.mean(density(field, P, L), axis=1) * np.cos(phi)
    return phi, ring
