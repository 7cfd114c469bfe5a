"""Deterministic figure rendering for CLI reports.

Figures are written as vector graphics (SVG by default, PDF accepted) with
fixed hash salts and stripped timestamps so repeated runs produce identical
bytes for identical inputs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .model import angular_to_mhz  # noqa: E402
from .reporting import ConfigError  # noqa: E402

_RC = {
    "svg.hashsalt": "qndspec",
    "figure.figsize": (6.4, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path: Path) -> None:
    suffix = path.suffix.lower()
    if suffix == ".svg":
        fig.savefig(path, format="svg", metadata={"Date": None})
    elif suffix == ".pdf":
        fig.savefig(path, format="pdf", metadata={"CreationDate": None})
    else:
        raise ConfigError(
            f"unsupported figure format {suffix!r}; use .svg or .pdf")
    plt.close(fig)


def save_spectrum_figure(omegas: np.ndarray, values: np.ndarray,
                         path: str | Path, *, label: str | None = None,
                         title: str | None = None) -> None:
    """Line plot of a transmission spectrum against linear-MHz probe axis."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot([angular_to_mhz(w) for w in omegas], values,
                lw=1.2, label=label)
        ax.set_xlabel("probe frequency $\\omega_L/2\\pi$ (MHz)")
        ax.set_ylabel("transmission $S$ [(rad/us)$^{-2}$]")
        if title:
            ax.set_title(title)
        if label:
            ax.legend(loc="best")
        fig.tight_layout()
        _save(fig, path)


def save_populations_figure(times: np.ndarray, populations: np.ndarray,
                            kets: Sequence[str], path: str | Path, *,
                            title: str | None = None) -> None:
    """Population-vs-wait-time curves, one per basis state."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for column, ket in enumerate(kets):
            ax.plot(times, populations[:, column], lw=1.2,
                    label=f"$|{ket}\\rangle$")
        ax.set_xlabel("wait time $\\tau$ (us)")
        ax.set_ylabel("population")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)
