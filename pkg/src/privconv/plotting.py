"""Render experiment tables as PNG figures.

Import is deferred to the CLI's --plot path so headless data runs never
touch matplotlib.
"""

from __future__ import annotations

import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

__all__ = ["render_comparison", "render_running_sum"]


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "-" for ch in text)


def render_comparison(rows: Sequence[dict], out_dir: str) -> list:
    """One log-log MSE-vs-N figure per filter family; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    families = sorted({row["filter"] for row in rows})
    for family in families:
        fam_rows = [row for row in rows if row["filter"] == family]
        mechanisms = sorted({row["mechanism"] for row in fam_rows})
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for mechanism in mechanisms:
            pts = sorted(
                (row["N"], row["empirical_mse"], row["theoretical_mse"])
                for row in fam_rows
                if row["mechanism"] == mechanism
            )
            ns = [p[0] for p in pts]
            ax.plot(ns, [p[1] for p in pts], "o", label=f"{mechanism} (empirical)")
            ax.plot(ns, [p[2] for p in pts], "-", alpha=0.6, label=f"{mechanism} (theory)")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel("per-coordinate MSE")
        ax.set_title(f"filter: {family}")
        ax.legend(fontsize=7)
        ax.grid(True, which="both", alpha=0.3)
        path = os.path.join(out_dir, f"comparison_{_slug(family)}.png")
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths


def render_running_sum(rows: Sequence[dict], out_dir: str) -> list:
    """Running-sum MSE growth against N on a log-log grid."""
    os.makedirs(out_dir, exist_ok=True)
    pts = sorted((row["N"], row["empirical_mse"], row["theoretical_mse"]) for row in rows)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ns = [p[0] for p in pts]
    ax.plot(ns, [p[1] for p in pts], "o-", label="empirical")
    ax.plot(ns, [p[2] for p in pts], "s--", alpha=0.6, label="theory")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("N (input length before padding)")
    ax.set_ylabel("per-coordinate MSE")
    ax.set_title("running sum, per-coefficient mechanism")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    path = os.path.join(out_dir, "running_sum.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return [path]
