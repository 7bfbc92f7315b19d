"""Figures that accompany the CSV reports.

Each run produces an input/output pair: overall level per channel before
voting, and the same traces after bad channels are masked to zero.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
    "figure.dpi": 100,
}

# no timestamps or version strings, so reruns are byte-identical
PNG_METADATA = {"Software": None}


def _step_times(starts):
    if len(starts) > 1:
        width = starts[1] - starts[0]
    else:
        width = 1.0
    return list(starts) + [starts[-1] + width] if starts else []


def _runs(mask):
    """[start, stop) index pairs of consecutive True entries."""
    runs, start = [], None
    for i, flag in enumerate(list(mask) + [False]):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
    return runs


def plot_channel_levels(starts, series, path, title="", ylabel="overall SPL (dB)", flagged=None):
    """One panel per channel, window-held step traces.

    ``series`` is channels x windows; ``flagged`` (same shape, bool) shades
    the windows where a channel was voted bad.
    """
    n = len(series)
    edges = _step_times(list(starts))
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(n, 1, sharex=True, figsize=(6.4, 1.0 + 0.75 * n), squeeze=False)
        for ch, ax in enumerate(axes[:, 0]):
            values = [v if math.isfinite(v) else 0.0 for v in series[ch]]
            if values:
                ax.stairs(values, edges, baseline=None, color="C0")
            if flagged is not None:
                for a, b in _runs(flagged[ch]):
                    ax.axvspan(edges[a], edges[b], color="C3", alpha=0.15, lw=0)
            ax.set_ylabel(f"ch{ch + 1}", rotation=0, ha="right", va="center")
            ax.yaxis.set_major_locator(MaxNLocator(2))
            ax.margins(y=0.15)
        axes[-1, 0].set_xlabel("time (s)")
        if title:
            axes[0, 0].set_title(title)
        fig.supylabel(ylabel, fontsize=9)
        # fixed margins; tight_layout dominates the render time
        fig.subplots_adjust(left=0.17, right=0.97, top=1 - 0.45 / fig.get_figheight(), bottom=0.5 / fig.get_figheight(), hspace=0.25)
        fig.savefig(path, metadata=PNG_METADATA)
        plt.close(fig)
    return Path(path)


def plot_report_pair(reports, out_dir, stem="", title=""):
    """Write ``<stem>input.png`` and ``<stem>output.png``; returns both paths."""
    out_dir = Path(out_dir)
    reports = [r for r in reports if r.overall_db]
    starts = [r.start_s for r in reports]
    n = len(reports[0].overall_db) if reports else 0
    raw = [[r.overall_db[c] for r in reports] for c in range(n)]
    masked = [[r.masked_overall[c] for r in reports] for c in range(n)]
    flagged = [[r.verdicts[c].status.is_bad for r in reports] for c in range(n)]
    prefix = f"{title}: " if title else ""
    first = plot_channel_levels(starts, raw, out_dir / f"{stem}input.png", f"{prefix}input")
    second = plot_channel_levels(starts, masked, out_dir / f"{stem}output.png", f"{prefix}output (bad channels masked to 0)", flagged=flagged)
    return first, second
