"""Matplotlib figures for pipeline reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def plot_cell_poset(report: dict, path: Path) -> Path:
    """Hasse diagram of non-empty cells ordered by their active ReLU sets."""
    cells = report["cells"]
    fig, ax = plt.subplots(figsize=(8, 5))
    if not cells:
        ax.text(0.5, 0.5, "no cells", ha="center")
        ax.axis("off")
        return _save(fig, path)
    levels: dict[int, list[dict]] = {}
    for c in cells:
        levels.setdefault(bin(c["number"]).count("1"), []).append(c)
    pos = {}
    for lvl, group in levels.items():
        for i, c in enumerate(sorted(group, key=lambda c: c["number"])):
            pos[c["number"]] = ((i + 1) / (len(group) + 1), lvl)
    numbers = [c["number"] for c in cells]
    for p in numbers:
        for q in numbers:
            if p != q and p & q == p:
                # draw only covering pairs
                if not any(r not in (p, q) and p & r == p and r & q == r for r in numbers):
                    (x0, y0), (x1, y1) = pos[p], pos[q]
                    ax.plot([x0, x1], [y0, y1], color="0.6", lw=0.8, zorder=1)
    for c in cells:
        x, y = pos[c["number"]]
        ax.text(x, y, f"{c['bitcode']}\n{c['count_1']} | {c['count_0']}", ha="center",
                va="center", fontsize=8, zorder=2,
                bbox={"boxstyle": "round", "fc": "white",
                      "lw": 2.0 if c["essential"] else 0.6})
    ax.set_ylabel("active ReLU nodes")
    ax.set_xticks([])
    ax.set_ylim(min(levels) - 0.6, max(levels) + 0.6)
    ax.set_title("non-empty partition cells (1-objects | 0-objects)")
    return _save(fig, path)


def plot_shapley(report: dict, path: Path) -> Path:
    rows = report["shapley"]
    names = report["summary"]["attributes"]
    fig, ax = plt.subplots(figsize=(1.4 * len(names) + 2, 0.5 * max(len(rows), 1) + 1.5))
    if rows:
        vals = np.array([r["values"] for r in rows])
        lim = float(np.max(np.abs(vals))) or 1.0
        im = ax.imshow(vals, cmap="RdBu_r", vmin=-lim, vmax=lim, aspect="auto")
        for i in range(vals.shape[0]):
            for j in range(vals.shape[1]):
                ax.text(j, i, f"{vals[i, j]:.3f}", ha="center", va="center", fontsize=8)
        ax.set_yticks(range(len(rows)), [str(r["cell"]) for r in rows])
        ax.set_xticks(range(len(names)), names, rotation=20, ha="right")
        fig.colorbar(im, ax=ax)
    ax.set_ylabel("partition cell")
    ax.set_title("Shapley values")
    fig.tight_layout()
    return _save(fig, path)


def plot_concepts(report: dict, path: Path, limit: int = 30) -> Path:
    rows = report["concepts"][:limit]
    fig, ax = plt.subplots(figsize=(8, 0.3 * max(len(rows), 1) + 1.5))
    if rows:
        ax.barh(range(len(rows)), [100 * c["relpower_value"] for c in rows], color="#4477AA")
        ax.set_yticks(range(len(rows)), [c["id"] for c in rows])
        ax.invert_yaxis()
    ax.set_xlabel("relpower [%]")
    ax.set_title(f"exclusive concepts ({report['summary']['method']})")
    fig.tight_layout()
    return _save(fig, path)


def plot_implications(report: dict, path: Path) -> Path:
    edges = report["concept_implications"]
    ids = sorted({a for e in edges for a in e}, key=lambda s: int(s[1:]))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.axis("off")
    if not ids:
        ax.text(0.5, 0.5, "no implications", ha="center")
        return _save(fig, path)
    angle = np.linspace(0, 2 * np.pi, len(ids), endpoint=False)
    pos = {c: (np.cos(t), np.sin(t)) for c, t in zip(ids, angle)}
    for a, b in edges:
        ax.annotate("", xy=pos[b], xytext=pos[a],
                    arrowprops={"arrowstyle": "->", "color": "0.4", "shrinkA": 12, "shrinkB": 12})
    for c, (x, y) in pos.items():
        ax.text(x, y, c, ha="center", va="center", bbox={"boxstyle": "circle", "fc": "white"})
    ax.set_xlim(-1.4, 1.4)
    ax.set_ylim(-1.4, 1.4)
    ax.set_title("concept implications")
    return _save(fig, path)


def render_figures(report: dict, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        plot_cell_poset(report, outdir / "cells.png"),
        plot_shapley(report, outdir / "shapley.png"),
        plot_concepts(report, outdir / "concepts.png"),
        plot_implications(report, outdir / "implications.png"),
    ]
