"""Loxodromic fields, perturbed test fields and rhumb-line tracing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import StepCollapseError
from .sphere_core import HALF_PI, AngleField, SphericalPoint, embed_arrays, meridian_tangent, parallel_tangent

POLE_TERMINATION = 1e-6
# Largest longitude increment allowed in one tracing step.
_MAX_DLAMBDA = 0.01
_MIN_STEP = 1e-14


def make_loxodromic_field(theta0: float) -> AngleField:
    """The field making the constant angle ``theta0`` with every parallel."""
    theta0 = float(theta0)

    def zero(phi, lam):
        return np.zeros(np.broadcast(phi, lam).shape)

    return AngleField(
        lambda phi, lam: np.full(np.broadcast(phi, lam).shape, theta0),
        zero,
        zero,
        kind="closed-form",
        winding=0,
        label=f"loxodromic theta0={theta0:.10g}",
        meta={"type": "loxodromic", "theta0": theta0},
    )


_WINDOWS = {
    "none": (lambda phi: np.ones_like(phi), lambda phi: np.zeros_like(phi)),
    "cos2": (lambda phi: np.cos(phi) ** 2, lambda phi: -np.sin(2.0 * phi)),
}


def make_test_field(k: int = 0, a: float = 0.0, m: int = 1, theta0: float = HALF_PI,
                    phase: float = 0.0, window: str = "none") -> AngleField:
    """``theta = theta0 + k*lam + a*cos(m*lam + phase)*window(phi)``.

    ``window`` is ``"none"`` or ``"cos2"`` (perturbation fades toward the poles).
    With ``k = a = 0`` this is the loxodromic field of angle ``theta0``.
    """
    if int(k) != k or int(m) != m:
        raise ValueError("winding k and mode m must be integers")
    if window not in _WINDOWS:
        raise ValueError(f"unknown window {window!r}")
    k, m, a, theta0, phase = int(k), int(m), float(a), float(theta0), float(phase)
    w, dw = _WINDOWS[window]

    def theta(phi, lam):
        phi, lam = np.broadcast_arrays(phi, lam)
        return theta0 + k * lam + a * np.cos(m * lam + phase) * w(phi)

    def d_phi(phi, lam):
        phi, lam = np.broadcast_arrays(phi, lam)
        return a * np.cos(m * lam + phase) * dw(phi)

    def d_lam(phi, lam):
        phi, lam = np.broadcast_arrays(phi, lam)
        return k - a * m * np.sin(m * lam + phase) * w(phi)

    return AngleField(
        theta, d_phi, d_lam, kind="closed-form", winding=k,
        label=f"test field k={k} a={a:g} m={m} theta0={theta0:.10g}",
        meta={"type": "test", "k": k, "a": a, "m": m, "theta0": theta0, "phase": phase, "window": window},
    )


def random_smooth_field(rng: np.random.Generator, winding: Optional[int] = None, modes: int = 3,
                        amplitude: float = 0.4) -> AngleField:
    """A random trigonometric field with analytic derivatives.

    theta = t0 + k*lam + sum_m (a_m cos(m lam) + b_m sin(m lam)) * (c0 + c1 sin(phi) + c2 cos(2 phi))
            + d1 sin(phi) + d2 sin(2 phi)
    """
    k = int(rng.integers(-1, 3)) if winding is None else int(winding)
    t0 = float(rng.uniform(0.0, 2.0 * math.pi))
    ms = np.arange(1, modes + 1)
    a = rng.normal(0.0, amplitude, modes) / ms
    b = rng.normal(0.0, amplitude, modes) / ms
    c = rng.uniform(-1.0, 1.0, 3)
    d = rng.normal(0.0, amplitude, 2)

    def lam_part(lam):
        lam = np.asarray(lam)[..., None]
        return np.sum(a * np.cos(ms * lam) + b * np.sin(ms * lam), axis=-1)

    def lam_part_d(lam):
        lam = np.asarray(lam)[..., None]
        return np.sum(ms * (b * np.cos(ms * lam) - a * np.sin(ms * lam)), axis=-1)

    def shape(phi):
        return c[0] + c[1] * np.sin(phi) + c[2] * np.cos(2.0 * phi)

    def shape_d(phi):
        return c[1] * np.cos(phi) - 2.0 * c[2] * np.sin(2.0 * phi)

    def theta(phi, lam):
        phi, lam = np.broadcast_arrays(np.asarray(phi, float), np.asarray(lam, float))
        return t0 + k * lam + lam_part(lam) * shape(phi) + d[0] * np.sin(phi) + d[1] * np.sin(2.0 * phi)

    def d_phi(phi, lam):
        phi, lam = np.broadcast_arrays(np.asarray(phi, float), np.asarray(lam, float))
        return lam_part(lam) * shape_d(phi) + d[0] * np.cos(phi) + 2.0 * d[1] * np.cos(2.0 * phi)

    def d_lam(phi, lam):
        phi, lam = np.broadcast_arrays(np.asarray(phi, float), np.asarray(lam, float))
        return k + lam_part_d(lam) * shape(phi)

    return AngleField(theta, d_phi, d_lam, kind="closed-form", winding=k,
                      label=f"random smooth field k={k}", meta={"type": "random", "k": k})


@dataclass
class RhumbTrace:
    s: np.ndarray
    phi: np.ndarray
    lam: np.ndarray
    theta0: float
    direction: int
    reason: str
    length_to_pole: Optional[float] = None
    steps: list = field(default_factory=list, repr=False)

    @property
    def points(self):
        return [SphericalPoint(p, l) for p, l in zip(self.phi, self.lam)]

    def xyz(self) -> np.ndarray:
        return embed_arrays(self.phi, self.lam)

    def tangents(self) -> np.ndarray:
        """Unit tangents in R^3 from the trace equations at the stored points."""
        dphi = math.sin(self.theta0)
        dlam = math.cos(self.theta0) / np.cos(self.phi)
        # d(embed)/dphi = n and d(embed)/dlam = cos(phi) u
        t = dphi * meridian_tangent(self.phi, self.lam) + (np.cos(self.phi) * dlam)[:, None] * parallel_tangent(self.phi, self.lam)
        return t / np.linalg.norm(t, axis=-1, keepdims=True)

    def crossing_angles(self) -> np.ndarray:
        """Oriented angle from ``u`` to the trace tangent at every stored point."""
        t = self.tangents()
        u = parallel_tangent(self.phi, self.lam)
        n = meridian_tangent(self.phi, self.lam)
        return np.arctan2(np.sum(t * n, axis=-1), np.sum(t * u, axis=-1))

    def rows(self):
        xyz = self.xyz()
        for i in range(len(self.s)):
            yield (self.s[i], self.phi[i], self.lam[i], xyz[i, 0], xyz[i, 1], xyz[i, 2])


def _rhs(theta0, phi):
    return math.sin(theta0), math.cos(theta0) / math.cos(phi)


def trace_rhumb(theta0: float, start: SphericalPoint, s_max: float, step: float = 1e-3,
                max_dlambda: float = _MAX_DLAMBDA) -> RhumbTrace:
    """Integrate the unit-speed rhumb line ``phi' = sin(theta0)``, ``lam' = cos(theta0)/cos(phi)``.

    Classical RK4 with the step capped so that longitude advances at most
    ``max_dlambda`` per step and so that the last step lands exactly on the
    termination latitude ``pi/2 - 1e-6`` when the trace reaches a pole.
    Longitude is not reduced along the trace.
    """
    theta0 = float(theta0)
    sin0 = math.sin(theta0)
    cos0 = math.cos(theta0)
    direction = 0 if abs(sin0) < 1e-15 else (1 if sin0 > 0 else -1)
    phi_stop = HALF_PI - POLE_TERMINATION
    s, phi, lam = 0.0, start.phi, start.lam
    out_s, out_phi, out_lam = [s], [phi], [lam]
    steps = []
    reason = "s_max"
    while s < s_max:
        h = min(step, s_max - s)
        if abs(cos0) > 0.0:
            # bound cos(phi) over the step by its value at the far end of a full step
            far = max(-phi_stop, min(phi_stop, phi + h * sin0))
            h = min(h, max_dlambda * min(math.cos(phi), math.cos(far)) / abs(cos0))
        to_pole = None
        if direction != 0:
            to_pole = (phi_stop - direction * phi) / abs(sin0)
            if to_pole <= h:
                h = to_pole
        if h < _MIN_STEP:
            if to_pole is not None and to_pole <= _MIN_STEP:
                reason = "pole"
                break
            raise StepCollapseError(f"step underflow at s={s:.6g}, phi={phi:.6g}")
        k1 = _rhs(theta0, phi)
        k2 = _rhs(theta0, phi + 0.5 * h * k1[0])
        k3 = _rhs(theta0, phi + 0.5 * h * k2[0])
        k4 = _rhs(theta0, phi + h * k3[0])
        phi_new = phi + h * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
        lam += h * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
        if to_pole is not None and h == to_pole:
            phi_new = direction * phi_stop
        phi = phi_new
        s += h
        steps.append(h)
        out_s.append(s)
        out_phi.append(phi)
        out_lam.append(lam)
        if to_pole is not None and h == to_pole:
            reason = "pole"
            break

    s_arr = np.array(out_s)
    phi_arr = np.array(out_phi)
    length = None
    if reason == "pole" and len(s_arr) > 1:
        # complete the last leg with the measured slope of the final step
        slope = (s_arr[-1] - s_arr[-2]) / abs(phi_arr[-1] - phi_arr[-2])
        length = float(s_arr[-1] + (HALF_PI - abs(phi_arr[-1])) * slope)
    return RhumbTrace(s_arr, phi_arr, np.array(out_lam), theta0, direction, reason, length, steps)


def figure_trace() -> RhumbTrace:
    """Spiral at theta0 = pi/12 from the equator to the north pole (about 8.6 turns)."""
    return trace_rhumb(math.pi / 12.0, SphericalPoint(0.0, 0.0), s_max=50.0)
