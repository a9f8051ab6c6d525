"""Static SVG renderings of histogram and boxplot outputs (needs matplotlib)."""

from __future__ import annotations

from typing import Sequence

from .sessions import BoxStats, EntropyHistogram


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # optional dependency
        raise RuntimeError("SVG output needs matplotlib: pip install 'fpentropy[plot]'") from exc
    matplotlib.use("Agg")
    # fixed salt and no date so the SVG bytes are reproducible
    matplotlib.rcParams["svg.hashsalt"] = "fpentropy"
    import matplotlib.pyplot as plt

    return plt


def histogram_svg(hist: EntropyHistogram, path: str, title: str = "Session entropy") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    widths = hist.edges[1:] - hist.edges[:-1]
    ax.bar(hist.edges[:-1], hist.mass, width=widths, align="edge", edgecolor="black")
    ax.set_xlabel("Chow-Liu bound (bits)")
    ax.set_ylabel("fraction of sites")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def boxplot_svg(stats: Sequence[BoxStats], path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    boxes = [
        {"label": b.bucket, "whislo": b.minimum, "q1": b.q1, "med": b.median, "q3": b.q3, "whishi": b.maximum, "fliers": []}
        for b in stats
    ]
    if boxes:
        ax.bxp(boxes, showfliers=False)
    ax.set_xlabel("sessions with a fingerprinting signature")
    ax.set_ylabel("mean session entropy (bits)")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
