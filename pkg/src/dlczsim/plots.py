"""Matplotlib figure rendering for the CLI report paths.

Every figure is written next to the delimited output it illustrates.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import model  # noqa: E402


def plot_sweep(rows: list[dict], out_prefix: Path) -> list[Path]:
    """Render g2(tau_w) and S(tau_w) panels from sweep rows."""
    tau = np.array([r["tau_w_ns"] for r in rows])
    written = []

    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    g2 = np.array([r["g2"] for r in rows])
    g2s = np.array([r["g2_sigma"] for r in rows])
    ax.errorbar(tau, g2, yerr=g2s, fmt="o", ms=4, capsize=2, color="k")
    ax.set_xscale("log")
    ax.set_xlabel(r"write-pulse width $\tau_w$ [ns]")
    ax.set_ylabel(r"$g^{(2)}$")
    fig.tight_layout()
    path = out_prefix.with_name(out_prefix.name + "_g2.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    s = np.array([r["S"] for r in rows])
    ss = np.array([r["S_sigma"] for r in rows])
    ax.errorbar(tau, s, yerr=ss, fmt="s", ms=4, capsize=2, color="tab:red")
    ax.axhline(2.0, ls="--", lw=0.8, color="gray", label="classical bound")
    ax.axhline(model.TWO_SQRT_TWO, ls=":", lw=0.8, color="gray",
               label=r"$2\sqrt{2}$")
    ax.set_xscale("log")
    ax.set_xlabel(r"write-pulse width $\tau_w$ [ns]")
    ax.set_ylabel("Bell parameter S")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = out_prefix.with_name(out_prefix.name + "_s.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written


def plot_histogram(bins: list[tuple[float, int]], bin_ns: float,
                   detector_class: str, path: Path) -> Path:
    starts = np.array([b[0] for b in bins])
    counts = np.array([b[1] for b in bins])
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.step(starts, counts, where="post", color="tab:blue")
    ax.set_xlabel("time in window [ns]")
    ax.set_ylabel(f"counts / {bin_ns:g} ns")
    ax.set_title(f"{detector_class}-channel wave shape")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_fit(x, y, sigma, x_curve, y_curve, xlabel: str, ylabel: str,
             path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    if sigma is not None:
        ax.errorbar(x, y, yerr=sigma, fmt="o", ms=4, capsize=2, color="k",
                    label="data")
    else:
        ax.plot(x, y, "ko", ms=4, label="data")
    ax.plot(x_curve, y_curve, "-", color="tab:red", label="fit")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
