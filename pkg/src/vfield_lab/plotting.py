"""Figures written next to CLI outputs."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (6.4, 4.0)
DPI = 150

plt.rcParams.update({
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.0,
    "savefig.bbox": "tight",
})


def _save(fig, path):
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_trace(trace, path):
    """Rhumb line drawn on a wireframe unit sphere."""
    fig = plt.figure(figsize=(5.0, 5.0))
    ax = fig.add_subplot(projection="3d")
    u, w = np.meshgrid(np.linspace(0, 2 * math.pi, 37), np.linspace(-math.pi / 2, math.pi / 2, 19))
    ax.plot_wireframe(np.cos(w) * np.cos(u), np.cos(w) * np.sin(u), np.sin(w), color="0.8", linewidth=0.4)
    xyz = trace.xyz()
    ax.plot(xyz[:, 0], xyz[:, 1], xyz[:, 2], color="C3")
    ax.set_box_aspect((1, 1, 1))
    ax.set_axis_off()
    ax.set_title(f"rhumb line, theta0 = {trace.theta0:.4g} rad")
    return _save(fig, path)


def plot_curvature_map(phi, lam, kappa, tau, path):
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), sharey=True)
    for ax, data, name in zip(axes, (kappa, tau), ("kappa", "tau")):
        lim = float(np.percentile(np.abs(data), 99)) or 1.0
        m = ax.pcolormesh(lam, phi, data, shading="auto", cmap="RdBu_r", vmin=-lim, vmax=lim)
        ax.set_xlabel("longitude [rad]")
        ax.set_title(name)
        fig.colorbar(m, ax=ax)
    axes[0].set_ylabel("latitude [rad]")
    return _save(fig, path)


def plot_volume_profile(phi, ring, path, reference=2 * math.pi):
    """Volume per parallel; a loxodromic field gives the constant ``2 pi``."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(phi, ring, label="field")
    ax.axhline(reference, color="k", linestyle="--", label="loxodromic")
    ax.set_xlabel("latitude [rad]")
    ax.set_ylabel("volume per unit latitude")
    ax.legend()
    return _save(fig, path)


def plot_minimization(report, path):
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    it = np.arange(len(report.objective_trace))
    a1.plot(it, np.asarray(report.objective_trace) - 2 * math.pi**2, marker="o")
    a1.set_yscale("symlog", linthresh=1e-14)
    a1.set_xlabel("iteration")
    a1.set_ylabel("volume - 2 pi^2")
    if report.defect_trace:
        a2.semilogy(np.arange(len(report.defect_trace)), np.maximum(report.defect_trace, 1e-16), marker="o")
    a2.set_xlabel("iteration")
    a2.set_ylabel("loxodromy defect")
    return _save(fig, path)


def plot_index(angles_n, angles_s, path):
    """Chart angle of the field along the two probe circles, unwrapped."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for angles, name in ((angles_n, "N"), (angles_s, "S")):
        t = np.linspace(0.0, 2 * math.pi, len(angles), endpoint=False)
        ax.plot(t, np.unwrap(angles), label=name)
    ax.set_xlabel("longitude on probe [rad]")
    ax.set_ylabel("chart angle of v [rad]")
    ax.legend()
    return _save(fig, path)
