"""Render a property diagram to an image file.

One panel per classified property, scattered over the (s, t) triangle.
Mismatches against the predicted sets are circled so they stand out when
scanning a sweep.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .diagram import PropertyDiagram

__all__ = ["render_diagram"]

_FLAG_COLORS = {True: "#1f77b4", False: "#d9d9d9", None: "#ffffff"}


def _panel(ax, cells, flag_of, mismatch_of, title):
    xs = [c.s for c in cells]
    ys = [c.t for c in cells]
    colors = [_FLAG_COLORS[flag_of(c)] for c in cells]
    ax.scatter(xs, ys, c=colors, s=14, marker="s", linewidths=0)
    bad = [c for c in cells if mismatch_of(c)]
    if bad:
        ax.scatter(
            [c.s for c in bad],
            [c.t for c in bad],
            facecolors="none",
            edgecolors="#d62728",
            s=40,
            linewidths=1.0,
        )
    ax.set_title(title)
    ax.set_xlabel("s")
    ax.set_ylabel("t")
    ax.set_aspect("equal", adjustable="box")


def render_diagram(diagram: PropertyDiagram, path) -> None:
    """Write a PNG/PDF (by extension) of the classified grid."""
    cells = [c for c in diagram.cells if c.defined]
    panels = []
    if "baric" in diagram.props:
        panels.append(
            ("baric", lambda c: c.baric, lambda c: c.baric_match is False)
        )
    if "nilpotent" in diagram.props:
        panels.append(
            (
                "unique nilpotent",
                lambda c: c.nilpotent_unique,
                lambda c: c.nilpotent_match is False,
            )
        )
    if "idempotent" in diagram.props:
        panels.append(
            (
                "nontrivial idempotent",
                lambda c: None if c.idempotent_count is None else c.idempotent_count > 1,
                lambda c: False,
            )
        )
    if not panels:
        raise ValueError("diagram has no classified properties to plot")
    fig, axes = plt.subplots(1, len(panels), figsize=(4.2 * len(panels), 4.0))
    if len(panels) == 1:
        axes = [axes]
    for ax, (title, flag_of, mismatch_of) in zip(axes, panels):
        _panel(ax, cells, flag_of, mismatch_of, title)
    label = diagram.family.kind
    if diagram.family.a is not None:
        label += f" (a={diagram.family.a:g})"
    fig.suptitle(f"family {label}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
