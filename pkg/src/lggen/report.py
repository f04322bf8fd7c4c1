"""Figures for the ``count`` and ``generate`` reports."""

from __future__ import annotations

import math
from collections import Counter
from pathlib import Path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_module_counts(rows, path, title="Patterns per module"):
    """Horizontal bar chart of log10 path counts, one bar per module row.

    ``rows`` are mappings with at least ``module``, ``part`` and ``count``.
    """
    plt = _pyplot()
    rows = list(rows)
    parts = sorted({r["part"] for r in rows})
    colors = {p: plt.cm.tab10(i % 10) for i, p in enumerate(parts)}
    height = max(3.0, 0.18 * len(rows) + 1.0)
    fig, ax = plt.subplots(figsize=(7.5, height))
    labels = [r["module"] for r in rows]
    values = [math.log10(r["count"]) if r["count"] > 0 else 0.0 for r in rows]
    ax.barh(range(len(rows)), values, color=[colors[r["part"]] for r in rows])
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(labels, fontsize=6)
    ax.invert_yaxis()
    ax.set_xlabel("log10(# of patterns)")
    ax.set_title(title)
    handles = [plt.Rectangle((0, 0), 1, 1, color=colors[p]) for p in parts]
    ax.legend(handles, parts, fontsize=6, loc="lower right")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def plot_selection(examples, path, title="Selected utterances"):
    """Two panels: weight histogram and counts per honorific level."""
    plt = _pyplot()
    examples = list(examples)
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.5))
    weights = [ex.weight for ex in examples]
    if weights:
        left.hist(weights, bins=min(30, max(5, len(set(weights)))), color="#4c72b0")
    left.set_xlabel("weight")
    left.set_ylabel("utterances")
    levels = Counter(ex.tags.get("honorific") or "(none)" for ex in examples)
    names = sorted(levels)
    right.bar(names, [levels[n] for n in names], color="#55a868")
    right.set_ylabel("utterances")
    right.set_xlabel("honorific")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)
