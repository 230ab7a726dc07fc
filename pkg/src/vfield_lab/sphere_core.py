"""Latitude-longitude geometry of the punctured unit sphere.

Conventions used everywhere in the package:

* ``u`` is the unit tangent to the parallel, pointing toward increasing longitude.
* ``n`` is the unit tangent to the meridian, pointing north (increasing latitude).
* ``theta`` is the oriented angle from ``u`` to the field vector ``v`` and is
  never reduced, so a field may wind ``k`` times around each parallel.
* ``v = cos(theta) u + sin(theta) n`` and ``v_perp = sin(theta) u - cos(theta) n``.

Both ordered frames ``(u, n)`` and ``(v_perp, v)`` are positively oriented with
respect to the outward normal, which on the unit sphere is the position vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationError

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi

# Default step for central differences of theta (radians).
DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class SphericalPoint:
    """A point of the sphere with the poles removed."""

    phi: float
    lam: float

    def __post_init__(self):
        phi = float(self.phi)
        if not math.isfinite(phi) or abs(phi) >= HALF_PI:
            raise ValueError(f"latitude {phi!r} is not in the open interval (-pi/2, pi/2)")
        lam = float(self.lam)
        if not math.isfinite(lam):
            raise ValueError(f"longitude {lam!r} is not finite")
        lam = math.fmod(lam, TWO_PI)
        if lam < 0.0:
            lam += TWO_PI
        if lam >= TWO_PI:
            lam = 0.0
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "lam", lam)


def embed_arrays(phi, lam):
    """Vectorised embedding; returns an array of shape ``phi.shape + (3,)``."""
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    cp = np.cos(phi)
    return np.stack(np.broadcast_arrays(cp * np.cos(lam), cp * np.sin(lam), np.sin(phi)), axis=-1)


def embed(point: SphericalPoint) -> np.ndarray:
    return embed_arrays(point.phi, point.lam)


def unembed_arrays(xyz, lam_ref=None):
    """Latitude and longitude of points given in R^3.

    Without ``lam_ref`` the longitude is reduced to ``[0, 2pi)``.  With it, the
    longitude is taken on the branch closest to ``lam_ref``; this keeps an
    unreduced ``theta`` continuous along short paths that cross the seam.
    """
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    rho = np.hypot(x, y)
    phi = np.arctan2(z, rho)
    lam = np.arctan2(y, x)
    if lam_ref is None:
        lam = np.mod(lam, TWO_PI)
        lam = np.where(lam >= TWO_PI, 0.0, lam)
    else:
        lam = lam + TWO_PI * np.round((np.asarray(lam_ref) - lam) / TWO_PI)
    return phi, lam


def unembed(xyz) -> SphericalPoint:
    xyz = np.asarray(xyz, dtype=float)
    xyz = xyz / np.linalg.norm(xyz)
    phi, lam = unembed_arrays(xyz)
    return SphericalPoint(float(phi), float(lam))


def parallel_tangent(phi, lam):
    """The unit vector ``u`` (east) in R^3."""
    lam = np.asarray(lam, dtype=float)
    zero = np.zeros(np.broadcast(np.asarray(phi), lam).shape)
    return np.stack(np.broadcast_arrays(-np.sin(lam) + zero, np.cos(lam) + zero, zero), axis=-1)


def meridian_tangent(phi, lam):
    """The unit vector ``n`` (north) in R^3."""
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    sp = np.sin(phi)
    return np.stack(
        np.broadcast_arrays(-sp * np.cos(lam), -sp * np.sin(lam), np.cos(phi)), axis=-1
    )


def geodesic_point(p, direction, t):
    """Point at arc length ``t`` along the great circle leaving ``p`` along ``direction``."""
    t = np.asarray(t, dtype=float)[..., None]
    return np.cos(t) * p + np.sin(t) * direction


@dataclass(frozen=True)
class AngleField:
    """A unit vector field given by its angle ``theta(phi, lam)`` against ``u``.

    ``theta`` must accept numpy arrays and be a continuous function of an
    unreduced longitude, so that ``theta(phi, lam + 2pi) = theta(phi, lam) + 2pi*winding``.
    Missing partial derivatives fall back to central differences with step ``h``.
    """

    theta: Callable
    dtheta_dphi: Optional[Callable] = None
    dtheta_dlambda: Optional[Callable] = None
    kind: str = "closed-form"
    h: float = DEFAULT_FD_STEP
    winding: Optional[int] = None
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, phi, lam):
        return self.theta(np.asarray(phi, dtype=float), np.asarray(lam, dtype=float))

    def d_phi(self, phi, lam):
        phi = np.asarray(phi, dtype=float)
        lam = np.asarray(lam, dtype=float)
        if self.dtheta_dphi is not None:
            out = self.dtheta_dphi(phi, lam)
        else:
            h = self.h
            out = (self.theta(phi + h, lam) - self.theta(phi - h, lam)) / (2.0 * h)
        return _checked(np.broadcast_to(out, np.broadcast(phi, lam).shape), "dtheta/dphi")

    def d_lambda(self, phi, lam):
        phi = np.asarray(phi, dtype=float)
        lam = np.asarray(lam, dtype=float)
        if self.dtheta_dlambda is not None:
            out = self.dtheta_dlambda(phi, lam)
        else:
            h = self.h
            out = (self.theta(phi, lam + h) - self.theta(phi, lam - h)) / (2.0 * h)
        return _checked(np.broadcast_to(out, np.broadcast(phi, lam).shape), "dtheta/dlambda")

    def rotated(self, c: float) -> "AngleField":
        """The field ``theta(phi, lam + c)``."""
        dphi = None if self.dtheta_dphi is None else (lambda p, l: self.dtheta_dphi(p, l + c))
        dlam = None if self.dtheta_dlambda is None else (lambda p, l: self.dtheta_dlambda(p, l + c))
        return AngleField(
            lambda p, l: self.theta(p, l + c),
            dphi,
            dlam,
            kind=self.kind,
            h=self.h,
            winding=self.winding,
            label=f"{self.label} rotated by {c:g}" if self.label else "",
        )

    def without_derivatives(self) -> "AngleField":
        """Same angle function, derivatives forced through finite differences."""
        return AngleField(self.theta, kind=self.kind, h=self.h, winding=self.winding, label=self.label)


def _checked(values, what):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"non-finite {what}")
    return values


def field_vectors(field: AngleField, phi, lam):
    """Extrinsic ``(v, v_perp)`` of ``field`` at arrays of coordinates."""
    th = field(phi, lam)
    c = np.cos(th)[..., None]
    s = np.sin(th)[..., None]
    u = parallel_tangent(phi, lam)
    n = meridian_tangent(phi, lam)
    return c * u + s * n, s * u - c * n


def field_at_xyz(field: AngleField, xyz, lam_ref=None):
    """Extrinsic ``v`` at points given in R^3 (used by the finite-difference oracles)."""
    phi, lam = unembed_arrays(xyz, lam_ref)
    v, _ = field_vectors(field, phi, lam)
    return v


@dataclass(frozen=True)
class FrameSample:
    """Frame vectors at one point, extrinsically (R^3) and in the ``(u, n)`` basis."""

    point: SphericalPoint
    theta: float
    u: np.ndarray
    n: np.ndarray
    v: np.ndarray
    v_perp: np.ndarray

    @property
    def position(self) -> np.ndarray:
        return embed(self.point)

    @property
    def intrinsic(self) -> dict:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return {
            "u": (1.0, 0.0),
            "n": (0.0, 1.0),
            "v": (c, s),
            "v_perp": (s, -c),
        }


def frame_at(field: AngleField, point: SphericalPoint) -> FrameSample:
    th = float(field(point.phi, point.lam))
    u = parallel_tangent(point.phi, point.lam)
    n = meridian_tangent(point.phi, point.lam)
    c, s = math.cos(th), math.sin(th)
    return FrameSample(point, th, u, n, c * u + s * n, s * u - c * n)


def orientation_sign(a, b, position) -> float:
    """Sign of ``det(a, b, position)``: +1 when ``(a, b)`` is positively oriented."""
    return float(np.sign(np.dot(np.cross(a, b), position)))
