"""Static figures for a finished run (matplotlib, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import numpy as np


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_run(mode: str, model, tables: dict, out: Path) -> list[str]:
    plt = _plt()
    d = model.distances
    files = []

    def save(fig, name):
        fig.tight_layout()
        fig.savefig(out / name, dpi=120)
        plt.close(fig)
        files.append(name)

    curves = {k: v for k, v in tables.items() if k.startswith("ti") or k == "td_average"}
    if curves:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for name, p in curves.items():
            ax.semilogy(d, p, label=name.replace(".csv", ""))
        ax.set_xlabel("distance (m)")
        ax.set_ylabel("normalized received power")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        save(fig, "power_vs_distance.png")

        fig, ax = plt.subplots(figsize=(5, 3.5))
        for name, p in curves.items():
            ax.semilogy(d, model.ber(p * model.source.reference_power), label=name.replace(".csv", ""))
        ax.set_xlabel("distance (m)")
        ax.set_ylabel("BER")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        save(fig, "ber_vs_distance.png")

    if "td" in tables:
        t = model.grid.t * 1e9
        X, T = np.meshgrid(d, t)
        fig = plt.figure(figsize=(6, 4.5))
        ax = fig.add_subplot(projection="3d")
        ax.plot_surface(X, T, tables["td"], cmap="viridis", linewidth=0)
        ax.set_xlabel("distance (m)")
        ax.set_ylabel("time (ns)")
        ax.set_zlabel("normalized power")
        save(fig, "power_distance_time.png")

    if "compare" in tables:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(d, tables["compare"], "o-")
        ax.axhline(0.3, color="k", ls="--", lw=0.8)
        ax.set_xlabel("distance (m)")
        ax.set_ylabel("|log10 RTE/MC|")
        save(fig, "compare.png")
    return files
