"""Discrete minimisation of the volume over angle grids.

The unknown is ``theta`` on the nodes of a latitude-longitude mesh covering
``|phi| <= pi/2 - eps``.  Each mesh cell is split into two triangles, theta is
linear on each triangle, and the volume density times ``cos(phi)``,

    F(theta_phi, theta_lam, phi) = sqrt(cos^2 phi + (theta_lam + s sin phi)^2 + theta_phi^2 cos^2 phi),

is evaluated at triangle centroids.  The two polar collars ``|phi| > pi/2 - eps``
continue the boundary row with ``theta_phi = 0`` and are integrated with
Gauss-Legendre in latitude.  For constant theta ``F = 1`` everywhere, so the
discrete objective of a loxodromic grid is exactly ``2 pi^2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RectBivariateSpline

from .curvature import PARALLEL_CURVATURE_SIGN
from .sphere_core import HALF_PI, TWO_PI, AngleField

DEFAULT_COLLAR = 0.05
_COLLAR_NODES = 8
_SPLINE_PAD = 8

ARMIJO_C = 1e-4
SHRINK = 0.5
STEP0 = 0.1
STEP_MAX = 1.0
MIN_STEP = 1e-12
AUDIT_TOL = 1e-4


@dataclass
class ThetaGrid:
    values: np.ndarray
    winding: int = 0
    epsilon: float = DEFAULT_COLLAR

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if self.values.ndim != 2 or min(self.values.shape) < 4:
            raise ValueError("theta grid must be 2-D with at least 4 nodes per axis")
        if not 0.0 < self.epsilon < HALF_PI:
            raise ValueError("collar width must lie in (0, pi/2)")
        if int(self.winding) != self.winding:
            raise ValueError("winding must be an integer")
        self.winding = int(self.winding)

    @property
    def shape(self):
        return self.values.shape

    @property
    def phi(self) -> np.ndarray:
        return np.linspace(-HALF_PI + self.epsilon, HALF_PI - self.epsilon, self.values.shape[0])

    @property
    def lam(self) -> np.ndarray:
        n = self.values.shape[1]
        return TWO_PI * np.arange(n) / n

    @property
    def dphi(self) -> float:
        return (math.pi - 2.0 * self.epsilon) / (self.values.shape[0] - 1)

    @property
    def dlam(self) -> float:
        return TWO_PI / self.values.shape[1]

    def with_values(self, values) -> "ThetaGrid":
        return ThetaGrid(values, self.winding, self.epsilon)

    def rolled(self, shift: int) -> "ThetaGrid":
        """The grid of ``theta(phi, lam + shift * dlam)``, seam jump included."""
        n = self.values.shape[1]
        idx = np.arange(n) + shift
        vals = self.values[:, idx % n] + TWO_PI * self.winding * (idx // n)
        return self.with_values(vals)

    @classmethod
    def from_field(cls, field: AngleField, n_phi: int = 64, n_lambda: int = 128,
                   epsilon: float = DEFAULT_COLLAR, winding: Optional[int] = None) -> "ThetaGrid":
        k = field.winding if winding is None else winding
        if k is None:
            raise ValueError("winding of the field is unknown; pass it explicitly")
        g = cls(np.zeros((n_phi, n_lambda)), k, epsilon)
        P, L = np.meshgrid(g.phi, g.lam, indexing="ij")
        g.values = np.asarray(field(P, L), dtype=float)
        return g

    def to_field(self) -> AngleField:
        """Bicubic interpolant, periodic up to ``2 pi k`` in longitude.

        Outside the mesh the boundary rows are continued unchanged in latitude,
        matching the collar treatment of the objective.
        """
        n = self.values.shape[1]
        k = self.winding
        idx = np.arange(-_SPLINE_PAD, n + _SPLINE_PAD + 1)
        vals = self.values[:, idx % n] + TWO_PI * k * (idx // n)
        spline = RectBivariateSpline(self.phi, TWO_PI * idx / n, vals, kx=3, ky=3, s=0)
        lo, hi = -HALF_PI + self.epsilon, HALF_PI - self.epsilon

        def split(phi, lam):
            phi, lam = np.broadcast_arrays(np.asarray(phi, float), np.asarray(lam, float))
            turns = np.floor(lam / TWO_PI)
            return phi, np.clip(phi, lo, hi), lam - TWO_PI * turns, turns

        def theta(phi, lam):
            _, pc, lr, turns = split(phi, lam)
            return spline.ev(pc, lr) + TWO_PI * k * turns

        def d_phi(phi, lam):
            p, pc, lr, _ = split(phi, lam)
            inside = (p >= lo) & (p <= hi)
            return np.where(inside, spline.ev(pc, lr, dx=1), 0.0)

        def d_lam(phi, lam):
            _, pc, lr, _ = split(phi, lam)
            return spline.ev(pc, lr, dy=1)

        return AngleField(theta, d_phi, d_lam, kind="grid-interpolated", winding=k,
                          label=f"grid {self.values.shape[0]}x{n} k={k}")

    def to_checkpoint(self, iteration: int = 0, volume: Optional[float] = None) -> dict:
        return {
            "mesh": list(self.values.shape),
            "epsilon": self.epsilon,
            "winding": self.winding,
            "values": [float(x) for x in self.values.ravel(order="C")],
            "iteration": int(iteration),
            "volume": volume,
        }

    @classmethod
    def from_checkpoint(cls, data: dict) -> "ThetaGrid":
        n_phi, n_lambda = data["mesh"]
        vals = np.asarray(data["values"], dtype=float)
        if vals.size != n_phi * n_lambda:
            raise ValueError("checkpoint values do not match the mesh dimensions")
        return cls(vals.reshape(n_phi, n_lambda), data["winding"], data["epsilon"])

    def save(self, path, iteration: int = 0, volume: Optional[float] = None):
        Path(path).write_text(json.dumps(self.to_checkpoint(iteration, volume)) + "\n")

    @classmethod
    def load(cls, path) -> "ThetaGrid":
        return cls.from_checkpoint(json.loads(Path(path).read_text()))


class _Discretisation:
    """Difference operators, centroid latitudes and weights of one mesh."""

    def __init__(self, grid: ThetaGrid, sign: int):
        n_phi, n_lam = grid.shape
        self.shape = grid.shape
        self.sign = sign
        self.dphi = grid.dphi
        self.dlam = grid.dlam
        self.k = grid.winding
        phi = grid.phi
        self.w_tri = 0.5 * self.dphi * self.dlam
        # lower-left and upper-right triangle centroids of cell row i
        self.phi1 = (phi[:-1] + self.dphi / 3.0)[:, None]
        self.phi2 = (phi[:-1] + 2.0 * self.dphi / 3.0)[:, None]
        x, w = np.polynomial.legendre.leggauss(_COLLAR_NODES)
        e = grid.epsilon
        self.collar_phi = HALF_PI - e + 0.5 * e * (x + 1.0)
        self.collar_w = 0.5 * e * w * self.dlam
        self._precond = None

    def diffs(self, theta):
        d_phi = np.diff(theta, axis=0) / self.dphi
        nxt = np.roll(theta, -1, axis=1)
        nxt[:, -1] += TWO_PI * self.k
        d_lam = (nxt - theta) / self.dlam
        return d_phi, d_lam

    def _f(self, p, l, phi):
        c2 = np.cos(phi) ** 2
        a = l + self.sign * np.sin(phi)
        f = np.sqrt(c2 + a * a + p * p * c2)
        return f, p * c2 / f, a / f

    def _collar(self, row, south):
        # north collar uses +phi, south collar mirrors it: sin flips, cos unchanged
        phi = -self.collar_phi if south else self.collar_phi
        f, _, dl = self._f(0.0, row[:, None], phi[None, :])
        return f @ self.collar_w, dl @ self.collar_w

    def terms(self, theta):
        """Per-triangle and per-collar-edge contributions; their sum is the objective."""
        d_phi, d_lam = self.diffs(theta)
        f1, _, _ = self._f(d_phi, d_lam[:-1], self.phi1)
        f2, _, _ = self._f(np.roll(d_phi, -1, axis=1), d_lam[1:], self.phi2)
        cs, _ = self._collar(d_lam[0], True)
        cn, _ = self._collar(d_lam[-1], False)
        return np.concatenate([(self.w_tri * f1).ravel(), (self.w_tri * f2).ravel(), cs, cn])

    def objective_and_gradient(self, theta, need_grad=True):
        d_phi, d_lam = self.diffs(theta)
        f1, gp1, gl1 = self._f(d_phi, d_lam[:-1], self.phi1)
        f2, gp2, gl2 = self._f(np.roll(d_phi, -1, axis=1), d_lam[1:], self.phi2)
        cs, gcs = self._collar(d_lam[0], True)
        cn, gcn = self._collar(d_lam[-1], False)
        value = self.w_tri * (float(np.sum(f1)) + float(np.sum(f2))) + float(np.sum(cs)) + float(np.sum(cn))
        if not need_grad:
            return value, None
        a = self.w_tri * (gp1 + np.roll(gp2, 1, axis=1))
        b = np.zeros(self.shape)
        b[:-1] += self.w_tri * gl1
        b[1:] += self.w_tri * gl2
        b[0] += gcs
        b[-1] += gcn
        grad = np.zeros(self.shape)
        grad[1:] += a / self.dphi
        grad[:-1] -= a / self.dphi
        grad += (np.roll(b, 1, axis=1) - b) / self.dlam
        return value, grad

    def preconditioner(self):
        """Factorised Hessian of the objective at constant theta.

        Near constant theta ``F ~ 1 + s sin(phi) theta_lam + cos^2(phi) (theta_phi^2 + theta_lam^2) / 2``,
        so the metric is a ``cos^2``-weighted Dirichlet form; a small mass term
        removes the constant null direction.
        """
        if self._precond is not None:
            return self._precond
        n_phi, n_lam = self.shape
        N = n_phi * n_lam
        ids = np.arange(N).reshape(self.shape)
        # latitude differences: (n_phi-1) x n_lam rows
        rows = np.arange((n_phi - 1) * n_lam)
        Dp = sp.csr_matrix(
            (np.concatenate([np.full(rows.size, 1.0 / self.dphi), np.full(rows.size, -1.0 / self.dphi)]),
             (np.concatenate([rows, rows]), np.concatenate([ids[1:].ravel(), ids[:-1].ravel()]))),
            shape=(rows.size, N))
        rows = np.arange(N)
        Dl = sp.csr_matrix(
            (np.concatenate([np.full(N, 1.0 / self.dlam), np.full(N, -1.0 / self.dlam)]),
             (np.concatenate([rows, rows]), np.concatenate([np.roll(ids, -1, axis=1).ravel(), ids.ravel()]))),
            shape=(N, N))
        c1 = np.cos(self.phi1[:, 0]) ** 2
        c2 = np.cos(self.phi2[:, 0]) ** 2
        wp = self.w_tri * np.repeat(c1 + c2, n_lam)
        wl_row = np.zeros(n_phi)
        wl_row[:-1] += self.w_tri * c1
        wl_row[1:] += self.w_tri * c2
        collar = float(np.sum(self.collar_w * np.cos(self.collar_phi) ** 2))
        wl_row[0] += collar
        wl_row[-1] += collar
        wl = np.repeat(wl_row, n_lam)
        H = Dp.T @ sp.diags(wp) @ Dp + Dl.T @ sp.diags(wl) @ Dl
        mass = 1e-8 * self.dphi * self.dlam
        H = (H + mass * sp.identity(N)).tocsc()
        self._precond = spla.factorized(H)
        return self._precond


def grid_objective(grid: ThetaGrid, sign: int = PARALLEL_CURVATURE_SIGN) -> float:
    """Discrete volume of the grid field (collars included)."""
    value, _ = _Discretisation(grid, sign).objective_and_gradient(grid.values, need_grad=False)
    return value


def grid_objective_terms(grid: ThetaGrid, sign: int = PARALLEL_CURVATURE_SIGN) -> np.ndarray:
    """The individual quadrature contributions summed by :func:`grid_objective`."""
    return _Discretisation(grid, sign).terms(grid.values)


def grid_gradient(grid: ThetaGrid, sign: int = PARALLEL_CURVATURE_SIGN) -> np.ndarray:
    """Exact partial derivatives of :func:`grid_objective` with respect to every node value."""
    _, grad = _Discretisation(grid, sign).objective_and_gradient(grid.values)
    return grad


def loxodromy_defect(grid: ThetaGrid, field: Optional[AngleField] = None) -> float:
    """``sup sqrt(theta_v^2 + theta_vperp^2) = sup |grad theta|`` over the mesh nodes."""
    field = grid.to_field() if field is None else field
    P, L = np.meshgrid(grid.phi, grid.lam, indexing="ij")
    grad_sq = (field.d_lambda(P, L) / np.cos(P)) ** 2 + field.d_phi(P, L) ** 2
    return float(np.sqrt(np.max(grad_sq)))


@dataclass
class MinimizeReport:
    grid: ThetaGrid
    iterations: int
    objective_trace: list
    defect_trace: list
    step_history: list
    final_volume: float
    loxodromy_defect: float
    gradient_norm: float
    converged: bool
    status: str
    audit_volume: Optional[float] = None
    audit_discrepancy: Optional[float] = None
    anomaly: bool = False
    exploratory: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "objective_trace": list(self.objective_trace),
            "defect_trace": list(self.defect_trace),
            "step_history": list(self.step_history),
            "final_volume": self.final_volume,
            "loxodromy_defect": self.loxodromy_defect,
            "gradient_norm": self.gradient_norm,
            "converged": self.converged,
            "status": self.status,
            "audit_volume": self.audit_volume,
            "audit_discrepancy": self.audit_discrepancy,
            "anomaly": self.anomaly,
            "exploratory": self.exploratory,
            "mesh": list(self.grid.shape),
            "winding": self.grid.winding,
            "epsilon": self.grid.epsilon,
            "notes": list(self.notes),
        }


def minimize(grid0: ThetaGrid, max_iter: int = 500, tol: float = 1e-8, step0: float = STEP0,
             audit: bool = True, sign: int = PARALLEL_CURVATURE_SIGN, track_defect: bool = True,
             callback=None) -> MinimizeReport:
    """Preconditioned gradient descent with Armijo backtracking.

    The search direction is ``-P^{-1} grad`` with ``P`` the fixed metric of
    :meth:`_Discretisation.preconditioner`; the stopping test is the sup norm
    of that direction (an angle, in radians) dropping below ``tol``.  The first
    trial step is ``step0``; after an accepted step the next trial doubles it,
    capped at 1.
    """
    disc = _Discretisation(grid0, sign)
    solve = disc.preconditioner()
    theta = grid0.values.copy()
    value, grad = disc.objective_and_gradient(theta)
    direction = -solve(grad.ravel()).reshape(theta.shape)
    objective_trace = [value]
    defect_trace = [loxodromy_defect(grid0)] if track_defect else []
    steps = []
    status = "max-iter"
    t = step0
    it = 0
    while True:
        gnorm = float(np.max(np.abs(direction)))
        if gnorm < tol:
            status = "converged"
            break
        if it >= max_iter:
            break
        slope = float(np.sum(grad * direction))
        if slope >= 0.0:
            status = "non-descent"
            break
        while t >= MIN_STEP:
            trial = theta + t * direction
            new_value, _ = disc.objective_and_gradient(trial, need_grad=False)
            if new_value <= value + ARMIJO_C * t * slope:
                break
            t *= SHRINK
        else:
            status = "line-search-failure"
            break
        theta = trial
        steps.append(t)
        value, grad = disc.objective_and_gradient(theta)
        direction = -solve(grad.ravel()).reshape(theta.shape)
        objective_trace.append(value)
        it += 1
        if track_defect:
            defect_trace.append(loxodromy_defect(grid0.with_values(theta)))
        if callback is not None:
            callback(it, grid0.with_values(theta), value)
        t = min(2.0 * t, STEP_MAX)

    grid = grid0 if it == 0 else grid0.with_values(theta)
    defect = defect_trace[-1] if track_defect else loxodromy_defect(grid)
    report = MinimizeReport(
        grid=grid,
        iterations=it,
        objective_trace=objective_trace,
        defect_trace=defect_trace,
        step_history=steps,
        final_volume=value,
        loxodromy_defect=defect,
        gradient_norm=float(np.max(np.abs(direction))),
        converged=status == "converged",
        status=status,
        exploratory=grid0.winding != 0,
    )
    if report.exploratory:
        report.notes.append("winding class k != 0: the minimiser characterisation is not claimed")
    if audit and report.converged:
        audit_run(report)
    if report.converged and not report.exploratory and defect > 10.0 * max(tol, 1e-6):
        report.anomaly = True
        report.notes.append("stationary grid is not loxodromic")
    return report


def audit_run(report: MinimizeReport, n_phi: int = 512, n_lambda: int = 1024) -> MinimizeReport:
    """Re-measure the final volume with the band quadrature on the interpolated field."""
    from .volume import volume_total

    measured = volume_total(report.grid.to_field(), n_phi=n_phi, n_lambda=n_lambda, estimate_error=False)
    report.audit_volume = measured.total
    report.audit_discrepancy = abs(measured.total - report.final_volume)
    if report.audit_discrepancy > AUDIT_TOL:
        report.converged = False
        report.status = "audit-failed"
    return report
