"""PNG rendering of ambiguity maps, convergence traces and sweeps.

Needs the ``plot`` extra (matplotlib). Nothing else in the package imports
this module, so the numerical pipeline runs without a plotting backend.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import numpy as np
import polars as pl

from .exceptions import StapSlpError

logger = logging.getLogger(__name__)


def _pyplot() -> Any:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as e:
        raise StapSlpError("plotting needs matplotlib: install stap-slp[plot]", cause=e) from e
    return plt


def plot_ambiguity(frame: pl.DataFrame, path: Path, *, floor_db: float = -40.0) -> Path:
    """Heatmap of an ambiguity frame (``norm_doppler``, ``norm_spatial_freq``, ``value_db``)."""
    plt = _pyplot()
    fd = np.unique(frame["norm_doppler"].to_numpy())
    fs = np.unique(frame["norm_spatial_freq"].to_numpy())
    grid = (
        frame.sort(["norm_doppler", "norm_spatial_freq"])["value_db"]
        .to_numpy()
        .reshape(len(fd), len(fs))
    )
    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(
        np.maximum(grid, floor_db),
        extent=[fs[0], fs[-1], fd[0], fd[-1]],
        origin="lower",
        aspect="auto",
        cmap="jet",
        vmin=floor_db,
        vmax=max(0.0, float(grid.max())),
    )
    fig.colorbar(image, ax=ax, label="dB")
    ax.set_xlabel("normalized spatial frequency")
    ax.set_ylabel("normalized Doppler")
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    logger.debug("wrote heatmap %s", path)
    return path


def plot_trace(frame: pl.DataFrame, path: Path) -> Path:
    """SINR versus MM iteration, one curve per line."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for (line,), part in frame.group_by(["line"], maintain_order=True):
        ax.plot(part["iteration"].to_numpy(), part["sinr_db"].to_numpy(), marker=".", label=line)
    ax.set_xlabel("iteration")
    ax.set_ylabel("output SINR (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_sweep(frame: pl.DataFrame, path: Path) -> Path:
    """SINR versus the swept value, one curve per line; failed points are skipped."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ok = frame.filter(pl.col("sinr_db").is_not_null()).sort("value")
    for (line,), part in ok.group_by(["line"], maintain_order=True):
        ax.plot(part["value"].to_numpy(), part["sinr_db"].to_numpy(), marker="o", label=line)
    if frame.height:
        ax.set_xlabel(frame["axis"][0])
    ax.set_ylabel("output SINR (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
