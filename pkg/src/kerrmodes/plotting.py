"""Render figure results to SVG/PNG files with matplotlib.

Output is deterministic: the SVG hash salt is pinned and date metadata is
stripped, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .presets import FigureResult  # noqa: E402

_HASHSALT = "kerrmodes"


def render_figure(result: FigureResult, path: str | Path) -> Path:
    """Draw every series of the figure and write it to ``path``.

    The suffix selects the format (.svg or .png); spectra figures get a shot
    noise reference line at 0 and a floor line at -1.
    """
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": _HASHSALT, "figure.figsize": (6.4, 4.2)}):
        fig, ax = plt.subplots()
        for series in result.series:
            # continuation output is ordered by arclength, so a folded
            # bistability curve still draws as one connected line
            style = {"linestyle": "--", "color": "0.3"} if series.dashed else {}
            ax.plot(series.x, series.y, label=series.label, **style)
        if result.baseline is not None:
            ax.axhline(result.baseline, color="0.6", linewidth=0.8, zorder=0)
        if result.floor is not None:
            ax.axhline(result.floor, color="0.8", linewidth=0.8, zorder=0)
            ax.set_ylim(result.floor - 0.05, None)
        ax.set_xlabel(result.xlabel)
        ax.set_ylabel(result.ylabel)
        ax.set_title(result.title)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        fig.savefig(path, metadata=_strip_dates(path.suffix))
        plt.close(fig)
    return path


def _strip_dates(suffix: str) -> dict | None:
    if suffix == ".svg":
        return {"Date": None}
    if suffix == ".png":
        return {"Software": "kerrmodes"}
    return None
