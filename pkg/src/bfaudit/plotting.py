"""Render the reproduction figure CSVs to PNG files.

Only the two curve figures are plotted; the tables stay delimited-only.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_curves"]

_STYLES = {"conjugate": "-", "independence": "--"}


def render_curves(csv_path: str, png_path: str, title: str,
                  ylabel: str = "log10 BF") -> str:
    """Plot every non-x column of a curve CSV against its first column.

    Column names of the form ``<prior>_nu0_<a>_nu1_<b>`` get solid lines for
    conjugate curves and dashed for independence, matching the source
    figures' convention.
    """
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    cols = {name: [float(r[i]) for r in data] for i, name in enumerate(header)}
    xname = header[0]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for name in header[1:]:
        style = "-"
        for prefix, ls in _STYLES.items():
            if name.startswith(prefix):
                style = ls
        ax.plot(cols[xname], cols[name], style, label=name)
    ax.set_xlabel(xname)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return png_path
