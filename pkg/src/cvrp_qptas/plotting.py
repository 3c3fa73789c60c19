"""SVG figures of instances, solutions and benchmark ratios."""

from __future__ import annotations

import io
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed metadata keeps the SVG byte-stable across runs
_SVG_META = {"Date": None, "Creator": None}
plt.rcParams["svg.hashsalt"] = "cvrp-qptas"


def _svg(fig) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return buf.getvalue()


def tour_colors(count: int) -> list:
    cmap = plt.get_cmap("tab20" if count > 10 else "tab10")
    return [cmap(i % cmap.N) for i in range(count)]


def plot_solution(inst, sol=None, dissection=None, title: str | None = None) -> str:
    """Depot, customers, one colour per tour, optionally the dissection squares."""
    fig, ax = plt.subplots(figsize=(6, 6))
    if dissection is not None:
        _draw_dissection(ax, dissection)
    tours = sol.tours if sol is not None else []
    for t, color in zip(tours, tour_colors(len(tours))):
        pts = t.geometry(inst)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "-", color=color, lw=1.4)
    if inst.points:
        ax.scatter([p[0] for p in inst.points], [p[1] for p in inst.points], s=18, c="black", zorder=3)
    ax.scatter([inst.depot[0]], [inst.depot[1]], s=80, marker="s", c="red", zorder=4)
    ax.set_aspect("equal", adjustable="datalim")
    if title:
        ax.set_title(title)
    return _svg(fig)


def _draw_dissection(ax, d) -> None:
    pinst = d.pinst
    for sq, kids in d.tree.items():
        x1, y1, x2, y2 = d.bounds(sq)
        a = pinst.to_original((x1, y1))
        b = pinst.to_original((x2, y2))
        ax.plot(
            [a[0], b[0], b[0], a[0], a[0]],
            [a[1], a[1], b[1], b[1], a[1]],
            color="0.75",
            lw=0.6 if kids is None else 0.9,
            zorder=0,
        )


def plot_ratios(labels: Sequence[str], ratios: Sequence[float], title: str = "") -> str:
    """Bar chart of length ratios against the oracle."""
    fig, ax = plt.subplots(figsize=(max(4, 0.35 * len(labels) + 2), 3.5))
    ax.bar(range(len(ratios)), ratios, color="tab:blue")
    ax.axhline(1.0, color="black", lw=0.8)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=90, fontsize=7)
    ax.set_ylabel("length / optimum")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _svg(fig)
