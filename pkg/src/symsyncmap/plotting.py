"""SVG figures: map scatter plots, NMI traces and dendrograms."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .clustering import Dendrogram  # noqa: E402


def project_2d(positions: np.ndarray) -> tuple[np.ndarray, str]:
    """2-D view of a map: as is for k <= 2, else the two leading principal axes."""
    x = np.asarray(positions, dtype=float)
    if x.shape[1] == 1:
        return np.column_stack([x[:, 0], np.zeros(len(x))]), "1-D map"
    if x.shape[1] == 2:
        return x, "2-D map"
    c = x - x.mean(axis=0)
    _, s, vt = np.linalg.svd(c, full_matrices=False)
    share = (s[:2] ** 2).sum() / max((s ** 2).sum(), 1e-300)
    return c @ vt[:2].T, f"{x.shape[1]}-D map, first two principal axes ({share:.0%} variance)"


def scatter_svg(positions, labels=None, path=None, title: str = ""):
    """Scatter plot of node positions colored by ``labels``; returns the SVG text."""
    xy, view = project_2d(positions)
    fig, ax = plt.subplots(figsize=(5, 5))
    colors = np.zeros(len(xy)) if labels is None else np.asarray(labels)
    ax.scatter(xy[:, 0], xy[:, 1], c=colors, cmap="tab10", s=40, edgecolors="k", linewidths=0.4)
    for i, (a, b) in enumerate(xy):
        ax.annotate(str(i), (a, b), fontsize=6, xytext=(2, 2), textcoords="offset points")
    ax.set_title(f"{title} ({view})" if title else view, fontsize=9)
    ax.set_aspect("equal", adjustable="datalim")
    return _finish(fig, path)


def trace_svg(traces: dict, path=None, title: str = "NMI over time"):
    """``traces`` maps a series name to ``(steps, mean, std)``."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for name, (steps, mean, std) in traces.items():
        steps, mean, std = map(np.asarray, (steps, mean, std))
        ax.plot(steps, mean, label=name)
        ax.fill_between(steps, mean - std, mean + std, alpha=0.2)
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("encoded step")
    ax.set_ylabel("NMI")
    ax.set_title(title, fontsize=9)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def dendrogram_svg(d: Dendrogram, labels=None, path=None, title: str = "Ward dendrogram"):
    """Draw the merge tree with leaves in the usual left-to-right order."""
    n = d.n
    children = {n + i: (a, b) for i, (a, b, _, _) in enumerate(d.merges)}
    height = {n + i: dist for i, (_, _, dist, _) in enumerate(d.merges)}
    order = []

    def leaves(node):
        stack = [node]
        while stack:
            v = stack.pop()
            if v < n:
                order.append(v)
            else:
                a, b = children[v]
                stack.extend((b, a))

    leaves(2 * n - 2 if n > 1 else 0)
    xpos = {leaf: i for i, leaf in enumerate(order)}

    def x_of(v):
        if v < n:
            return xpos[v]
        a, b = children[v]
        return 0.5 * (x_of(a) + x_of(b))

    def h_of(v):
        return 0.0 if v < n else height[v]

    fig, ax = plt.subplots(figsize=(max(4, 0.25 * n), 3.5))
    for v, (a, b) in children.items():
        xa, xb, h = x_of(a), x_of(b), height[v]
        ax.plot([xa, xa, xb, xb], [h_of(a), h, h, h_of(b)], color="k", lw=0.8)
    ax.set_xticks(range(n))
    names = [str(v) for v in order]
    if labels is not None:
        names = [f"{v}:{labels[v]}" for v in order]
    ax.set_xticklabels(names, rotation=90, fontsize=6)
    ax.set_ylabel("merge distance")
    ax.set_title(title, fontsize=9)
    return _finish(fig, path)


def _finish(fig, path):
    import io

    buf = io.StringIO()
    fig.tight_layout()
    fig.savefig(buf, format="svg")
    plt.close(fig)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
