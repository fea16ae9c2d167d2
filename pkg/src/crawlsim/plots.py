"""Figure rendering for runs, comparisons and refinement certificates.

All figures are written as SVG files next to the delimited output, using
the Agg backend so rendering works headless.  SVG metadata that would
change between runs (dates, random ids) is pinned, keeping repeated runs
byte-stable.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .csvio import RunTable  # noqa: E402
from .model import BodyState  # noqa: E402
from .penalized import ConvergenceCertificate  # noqa: E402

__all__ = ["plot_trajectory", "plot_comparison", "plot_convergence"]

plt.rcParams["svg.hashsalt"] = "crawlsim"

_SAVE_OPTS = {"format": "svg", "metadata": {"Date": None}}


def _stick_spans(t: np.ndarray, tokens) -> list[tuple[float, float]]:
    """Contiguous [t0, t1] intervals where a body's regime token is stick."""
    stick = np.array([tok == BodyState.STICK.value for tok in tokens])
    spans: list[tuple[float, float]] = []
    start = None
    for i, flag in enumerate(stick):
        if flag and start is None:
            start = t[i]
        elif not flag and start is not None:
            spans.append((start, t[i]))
            start = None
    if start is not None:
        spans.append((start, t[-1]))
    return spans


def plot_trajectory(table: RunTable, path: str | Path, title: str = "") -> Path:
    """Three-panel run overview: velocity, positions, friction impulses.

    Stick intervals are shaded behind the velocity panel (body 1 darker,
    body 2 lighter).
    """
    t = np.asarray(table.column("t"))
    fig, axes = plt.subplots(3, 1, figsize=(8.0, 9.0), sharex=True)

    ax = axes[0]
    for t0, t1 in _stick_spans(t, table.column("regime1")):
        ax.axvspan(t0, t1, color="tab:blue", alpha=0.12, linewidth=0)
    for t0, t1 in _stick_spans(t, table.column("regime2")):
        ax.axvspan(t0, t1, color="tab:orange", alpha=0.10, linewidth=0)
    ax.plot(t, table.column("y"), color="tab:blue", linewidth=1.2)
    ax.set_ylabel("y = dx1/dt")
    ax.grid(True, alpha=0.3)

    ax = axes[1]
    ax.plot(t, table.column("x1"), label="x1", color="tab:blue", linewidth=1.2)
    ax.plot(t, table.column("x2"), label="x2", color="tab:orange", linewidth=1.2)
    ax.set_ylabel("position")
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, alpha=0.3)

    ax = axes[2]
    k_names = [name for name in table.columns if name.startswith("k")]
    for name in k_names:
        ax.plot(t, table.column(name), label=name, linewidth=1.2)
    ax.set_ylabel("friction impulse")
    ax.set_xlabel("t")
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, alpha=0.3)

    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def plot_comparison(
    grid: np.ndarray,
    y_a: np.ndarray,
    y_b: np.ndarray,
    labels: tuple[str, str],
    path: str | Path,
    title: str = "",
) -> Path:
    """Overlay of two velocity trajectories plus their pointwise gap."""
    grid = np.asarray(grid)
    fig, axes = plt.subplots(2, 1, figsize=(8.0, 6.5), sharex=True)

    ax = axes[0]
    ax.plot(grid, y_a, label=labels[0], color="tab:blue", linewidth=1.2)
    ax.plot(grid, y_b, label=labels[1], color="tab:red", linewidth=1.0, linestyle="--")
    ax.set_ylabel("y")
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, alpha=0.3)

    ax = axes[1]
    gap = np.abs(np.asarray(y_a) - np.asarray(y_b))
    positive = gap > 0.0
    if positive.any():
        ax.semilogy(grid[positive], gap[positive], color="tab:gray", linewidth=1.0)
    else:
        ax.plot(grid, gap, color="tab:gray", linewidth=1.0)
    ax.set_ylabel("|difference|")
    ax.set_xlabel("t")
    ax.grid(True, alpha=0.3, which="both")

    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def plot_convergence(cert: ConvergenceCertificate, path: str | Path) -> Path:
    """Measured successive gaps against their certified bounds, log-log."""
    fig, ax = plt.subplots(figsize=(6.5, 5.0))
    if cert.pairs:
        n_scale = [min(pair.n.n1, pair.n.n2) for pair in cert.pairs]
        measured = [max(pair.measured_sup, 1e-300) for pair in cert.pairs]
        bound = [np.sqrt(pair.bound) for pair in cert.pairs]
        ax.loglog(n_scale, bound, "o-", label="certified bound", color="tab:red")
        ax.loglog(n_scale, measured, "s-", label="measured sup-gap", color="tab:blue")
        ax.set_xlabel("smoothing index (smaller of the pair)")
        ax.set_ylabel("sup-norm gap")
    ax.axhline(cert.epsilon, color="tab:gray", linestyle=":", label="requested accuracy")
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, alpha=0.3, which="both")
    status = "converged" if cert.converged else "NOT converged"
    ax.set_title(f"refinement {status}: limit within {cert.epsilon_limit:.3e}")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path
