"""Render tail reports and bound curves to image files.

Figures accompany the delimited output: the CSV stays the primary,
plot-ready artifact, and these renderings are a convenience view of the
same numbers (log-scale tail probability against the threshold grid).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .report import BoundCurve, TailReport

_FLOOR = 1e-300


def render_tail_report(report: TailReport, path: str, title: str | None = None) -> None:
    """Plot the analytic bound against the estimated tail with its intervals."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    t = report.thresholds
    ax.plot(t, np.maximum(report.analytic_bound, _FLOOR),
            color="tab:blue", lw=1.5, label="analytic bound")

    observed = report.empirical_tail > 0
    if observed.any():
        yerr = np.vstack([
            report.empirical_tail[observed] - report.ci_low[observed],
            report.ci_high[observed] - report.empirical_tail[observed],
        ])
        label = "exact tail" if report.method == "exact" else "estimated tail"
        ax.errorbar(t[observed], report.empirical_tail[observed],
                    yerr=np.maximum(yerr, 0.0), fmt="o", ms=3.5,
                    color="tab:gray", ecolor="tab:gray", elinewidth=0.8,
                    capsize=2, label=label)
    flags = report.violation_flags
    if flags.any():
        ax.plot(t[flags], np.maximum(report.empirical_tail[flags], _FLOOR),
                "x", ms=8, color="tab:red", label="violation")

    ax.set_yscale("log")
    ax.set_xlabel("threshold")
    ax.set_ylabel("tail probability")
    ax.legend(frameon=False, fontsize=9)
    if title is None:
        title = f"{report.metadata.get('family', 'statistic')} ({report.method}, " \
                f"{report.sample_count} points)"
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_bound_curve(curve: BoundCurve, path: str, title: str | None = None) -> None:
    """Plot one or more analytic bound curves over the threshold grid."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, values in curve.columns.items():
        ax.plot(curve.thresholds, np.maximum(np.asarray(values, dtype=float), _FLOOR),
                lw=1.5, label=name)
    ax.set_yscale("log")
    ax.set_xlabel("threshold")
    ax.set_ylabel("tail probability bound")
    ax.legend(frameon=False, fontsize=9)
    if title is None:
        title = str(curve.metadata.get("family", curve.constants.get("family", "bound")))
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
