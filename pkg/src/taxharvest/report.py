"""Figure rendering for the CLI report paths.

Figures are written as SVG through the Agg backend with a fixed hash salt
and stripped date metadata, so identical inputs produce byte-identical
files (the CLI determinism contract).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .control import ControlSolution  # noqa: E402
from .dynamics import Trajectory  # noqa: E402
from .empirics import TAX_HEADS, CompositionReport  # noqa: E402

plt.rcParams["svg.hashsalt"] = "taxharvest"

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}

__all__ = [
    "save_trajectory_svg",
    "save_control_svg",
    "save_pie_svg",
    "save_ratio_svg",
]


def save_trajectory_svg(traj: Trajectory, path) -> None:
    """Three compartment time series with a shared legend."""
    fig, ax = plt.subplots(figsize=(8.0, 6.0))
    ax.plot(traj.times, traj.states[:, 0], label=r"$\bar{F}$ (informal profit)")
    ax.plot(traj.times, traj.states[:, 1], label=r"$F$ (formal profit)")
    ax.plot(traj.times, traj.states[:, 2], label=r"$G$ (government revenue)")
    ax.set_xlabel("time")
    ax.set_ylabel("level")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_control_svg(solution: ControlSolution, path) -> None:
    """Optimal penalty schedule u(t)."""
    fig, ax = plt.subplots(figsize=(8.0, 6.0))
    ax.plot(solution.times, solution.u)
    ax.set_xlabel("time")
    ax.set_ylabel("penalty control u")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_pie_svg(report: CompositionReport, path) -> None:
    """Tax-head composition pie in canonical column order."""
    fig, ax = plt.subplots(figsize=(8.0, 6.0))
    values = [report.shares[name] for name in TAX_HEADS]
    ax.pie(values, labels=list(TAX_HEADS), autopct="%.1f%%")
    ax.set_title("tax-head composition")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_ratio_svg(report: CompositionReport, path) -> None:
    """Total-tax-to-GDP ratio per year."""
    fig, ax = plt.subplots(figsize=(8.0, 6.0))
    ax.plot(report.years, report.ratios, marker="o", markersize=3)
    ax.set_xlabel("year")
    ax.set_ylabel("total tax / GDP")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
