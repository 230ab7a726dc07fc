"""Geodesic curvatures of a unit field and of its orthogonal field.

Two independent routes are provided:

* a closed form in terms of the directional derivatives of ``theta`` and the
  curvature of the parallels, ``g(nabla_u u, n)``;
* an extrinsic route that differentiates the R^3 field along great circles,
  projects to the tangent plane and reads off ``g(nabla_v v, v_perp)``.

The extrinsic route is the oracle for the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, PoleProximityError
from .sphere_core import (
    DEFAULT_FD_STEP,
    HALF_PI,
    AngleField,
    SphericalPoint,
    embed_arrays,
    field_vectors,
    geodesic_point,
    meridian_tangent,
    parallel_tangent,
    unembed_arrays,
)

# Sign s in g(nabla_u u, n) = s * tan(phi) for the north-pointing n.  Pinned by
# tests/test_curvature.py::test_pinned_sign_matches_oracle against the extrinsic
# derivative of the frame.  The value -1 gives the alternative formulas
# kappa = -theta_v + cos(theta) tan(phi), tau = -theta_vperp + sin(theta) tan(phi),
# which hold for a south-pointing n.  Magnitudes do not depend on the choice.
PARALLEL_CURVATURE_SIGN = 1
FLIPPED_PARALLEL_CURVATURE_SIGN = -1

# Stencil points must keep at least this much colatitude.
_POLE_MARGIN = 1e-9


@dataclass(frozen=True)
class CurvaturePair:
    kappa: float
    tau: float
    method: str

    @property
    def norm(self) -> float:
        return math.hypot(self.kappa, self.tau)


@dataclass(frozen=True)
class ConnectionFormValue:
    """The 1-form ``omega12 = tau * omega1 + kappa * omega2`` at one point.

    ``omega1``, ``omega2`` are dual to ``(v_perp, v)``; a tangent vector is first
    decomposed in that basis.
    """

    tau: float
    kappa: float
    v: np.ndarray
    v_perp: np.ndarray

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return self.tau * float(np.dot(x, self.v_perp)) + self.kappa * float(np.dot(x, self.v))


def theta_directional_arrays(field: AngleField, phi, lam):
    """Directional derivatives of theta along ``v`` and ``v_perp``.

    ``u`` and ``n`` are unit vectors, so ``u(theta) = theta_lambda / cos(phi)``
    and ``n(theta) = theta_phi``.
    """
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    th = field(phi, lam)
    d_u = field.d_lambda(phi, lam) / np.cos(phi)
    d_n = field.d_phi(phi, lam)
    c, s = np.cos(th), np.sin(th)
    theta_v = c * d_u + s * d_n
    theta_vperp = s * d_u - c * d_n
    if not (np.all(np.isfinite(theta_v)) and np.all(np.isfinite(theta_vperp))):
        raise EvaluationError("non-finite directional derivative of theta")
    return theta_v, theta_vperp


def theta_directional(field: AngleField, point: SphericalPoint):
    tv, tp = theta_directional_arrays(field, point.phi, point.lam)
    return float(tv), float(tp)


def curvature_arrays(field: AngleField, phi, lam, sign: int = PARALLEL_CURVATURE_SIGN):
    """Closed-form ``(kappa, tau)`` on arrays of coordinates.

    kappa = -theta_v    - cos(theta) g(nabla_u u, n)
    tau   = -theta_vperp - sin(theta) g(nabla_u u, n),   g(nabla_u u, n) = sign * tan(phi)
    """
    phi = np.asarray(phi, dtype=float)
    th = field(phi, lam)
    theta_v, theta_vperp = theta_directional_arrays(field, phi, lam)
    frame_term = sign * np.tan(phi)
    kappa = -theta_v - np.cos(th) * frame_term
    tau = -theta_vperp - np.sin(th) * frame_term
    return kappa, tau


def curvatures_closed_form(field: AngleField, point: SphericalPoint, sign: int = PARALLEL_CURVATURE_SIGN) -> CurvaturePair:
    kappa, tau = curvature_arrays(field, point.phi, point.lam, sign)
    return CurvaturePair(float(kappa), float(tau), "closed-form")


def _check_stencil(points):
    phi, _ = unembed_arrays(points)
    if np.any(np.abs(phi) >= HALF_PI - _POLE_MARGIN):
        raise PoleProximityError("finite-difference stencil reaches a pole")


def covariant_derivative_fd(vector_at, p, direction, h, lam_ref=None):
    """Central-difference covariant derivative of an R^3-valued tangent field.

    ``vector_at(xyz, lam_ref)`` evaluates the field; the ambient derivative along
    the great circle through ``p`` in ``direction`` is projected onto the tangent
    plane at ``p``, which is the Levi-Civita derivative of the round metric.
    """
    if not h > 0.0:
        raise PoleProximityError("finite-difference step must be positive")
    plus = geodesic_point(p, direction, h)
    minus = geodesic_point(p, direction, -h)
    _check_stencil(plus)
    _check_stencil(minus)
    d = (vector_at(plus, lam_ref) - vector_at(minus, lam_ref)) / (2.0 * h)
    normal = np.sum(d * p, axis=-1, keepdims=True)
    return d - normal * p


def _v_at(field):
    def at(xyz, lam_ref):
        phi, lam = unembed_arrays(xyz, lam_ref)
        v, _ = field_vectors(field, phi, lam)
        return v

    return at


def curvature_extrinsic_arrays(field: AngleField, phi, lam, h: float = DEFAULT_FD_STEP):
    """``kappa = g(nabla_v v, v_perp)`` and ``tau = g(nabla_vperp v, v_perp)`` by finite differences."""
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    p = embed_arrays(phi, lam)
    v, vp = field_vectors(field, phi, lam)
    at = _v_at(field)
    dv_v = covariant_derivative_fd(at, p, v, h, lam)
    dv_vp = covariant_derivative_fd(at, p, vp, h, lam)
    kappa = np.sum(dv_v * vp, axis=-1)
    tau = np.sum(dv_vp * vp, axis=-1)
    return kappa, tau


def curvatures_extrinsic(field: AngleField, point: SphericalPoint, h: float = DEFAULT_FD_STEP) -> CurvaturePair:
    kappa, tau = curvature_extrinsic_arrays(field, point.phi, point.lam, h)
    return CurvaturePair(float(kappa), float(tau), "extrinsic")


def parallel_curvature_extrinsic(phi, lam, h: float = DEFAULT_FD_STEP):
    """``g(nabla_u u, n)`` measured by differentiating the frame in R^3."""
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    p = embed_arrays(phi, lam)
    u = parallel_tangent(phi, lam)
    n = meridian_tangent(phi, lam)

    def u_at(xyz, lam_ref):
        ph, la = unembed_arrays(xyz, lam_ref)
        return parallel_tangent(ph, la)

    du_u = covariant_derivative_fd(u_at, p, u, h, lam)
    return np.sum(du_u * n, axis=-1)


def connection_form(field: AngleField, point: SphericalPoint, sign: int = PARALLEL_CURVATURE_SIGN) -> ConnectionFormValue:
    pair = curvatures_closed_form(field, point, sign)
    v, vp = field_vectors(field, point.phi, point.lam)
    return ConnectionFormValue(pair.tau, pair.kappa, v, vp)


def omega12_on_parallel(field: AngleField, phi, lam, sign: int = PARALLEL_CURVATURE_SIGN):
    """``omega12(u) = tau sin(theta) + kappa cos(theta)`` on arrays."""
    th = field(phi, lam)
    kappa, tau = curvature_arrays(field, phi, lam, sign)
    return tau * np.sin(th) + kappa * np.cos(th)


def kappa_terms(field: AngleField, point: SphericalPoint, h: float = DEFAULT_FD_STEP) -> dict:
    """The six summands of ``g(nabla_v v, v_perp)`` after expanding ``v`` in ``(u, n)``.

    The frame derivatives ``nabla_X Y`` for ``X, Y`` in ``{u, n}`` are measured
    extrinsically; the theta derivatives use the chain rule.  The values sum to
    kappa.  On the round sphere ``nabla_n u = 0`` and ``g(nabla_n n, u) = 0``,
    so ``b`` and ``e`` vanish and ``d`` carries the only ``g(nabla_u n, u)``
    contribution.
    """
    phi, lam = point.phi, point.lam
    p = embed_arrays(phi, lam)
    u = parallel_tangent(phi, lam)
    n = meridian_tangent(phi, lam)
    th = float(field(phi, lam))
    c, s = math.cos(th), math.sin(th)
    vp = s * u - c * n
    theta_v, _ = theta_directional(field, point)

    def u_at(xyz, lam_ref):
        ph, la = unembed_arrays(xyz, lam_ref)
        return parallel_tangent(ph, la)

    def n_at(xyz, lam_ref):
        ph, la = unembed_arrays(xyz, lam_ref)
        return meridian_tangent(ph, la)

    nabla_u_u = covariant_derivative_fd(u_at, p, u, h, lam)
    nabla_n_u = covariant_derivative_fd(u_at, p, n, h, lam)
    nabla_u_n = covariant_derivative_fd(n_at, p, u, h, lam)
    nabla_n_n = covariant_derivative_fd(n_at, p, n, h, lam)
    return {
        "a": c * c * float(np.dot(nabla_u_u, vp)),
        "b": c * s * float(np.dot(nabla_n_u, vp)),
        "c": -s * theta_v * float(np.dot(u, vp)),
        "d": c * s * float(np.dot(nabla_u_n, vp)),
        "e": s * s * float(np.dot(nabla_n_n, vp)),
        "f": c * theta_v * float(np.dot(n, vp)),
        "g_nabla_u_u_n": float(np.dot(nabla_u_u, n)),
    }
