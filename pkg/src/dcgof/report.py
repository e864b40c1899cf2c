"""Delimited output and static figures for profile and benchmark runs.

CSV artifacts carry the run configuration in a leading ``#`` comment line so
every file is self-describing; figures are rendered with the Agg backend and
written as static SVG.
"""

from __future__ import annotations

import csv
import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from ._json import dumps, jsonable  # noqa: E402
from .selection import ProfileCurve  # noqa: E402

__all__ = [
    "config_comment",
    "write_profile_csv",
    "write_curve_csv",
    "write_bench_csv",
    "render_profile_svg",
]


def config_comment(config: dict | None) -> str:
    if not config:
        return ""
    return "# config " + dumps(config).replace("\n", " ") + "\n"


def write_profile_csv(points, path, config: dict | None = None) -> None:
    """Rows of ``K,statistic,split_seed``."""
    with open(path, "w", newline="") as fh:
        fh.write(config_comment(config))
        w = csv.writer(fh)
        w.writerow(["K", "statistic", "split_seed"])
        for p in points:
            w.writerow([p.K, repr(p.statistic), p.split_seed])


def write_curve_csv(curve: ProfileCurve, path, config: dict | None = None) -> None:
    """Fitted curves on the evaluation grid: ``K,fit_gcv,fit_smooth,d1,d2``.

    The derivative columns come from the smoother fit (the one used for the
    headline elbow/dip call).
    """
    g = curve.grid
    f_gcv = curve.fit_gcv(g)
    f_smooth = curve.fit_smooth(g)
    d1 = curve.fit_smooth(g, deriv=1)
    d2 = curve.fit_smooth(g, deriv=2)
    with open(path, "w", newline="") as fh:
        fh.write(config_comment(config))
        w = csv.writer(fh)
        w.writerow(["K", "fit_gcv", "fit_smooth", "d1", "d2"])
        for row in zip(g, f_gcv, f_smooth, d1, d2):
            w.writerow([repr(float(v)) for v in row])


def write_bench_csv(rows, path, config: dict | None = None) -> None:
    """Tidy benchmark table: ``rep,method,K,statistic,decision``."""
    with open(path, "w", newline="") as fh:
        fh.write(config_comment(config))
        w = csv.writer(fh)
        w.writerow(["rep", "method", "K", "statistic", "decision"])
        for rep, method, K, stat, decision in rows:
            w.writerow([rep, method, K, repr(float(stat)), int(decision)])


def render_profile_svg(curve: ProfileCurve, path, title: str | None = None,
                       config: dict | None = None) -> None:
    """Scatter of split statistics, both fitted curves, elbow/dip markers.

    The run configuration rides along in the SVG metadata so the figure is
    self-describing like the delimited artifacts.
    """
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    xs = [p.K for p in curve.points]
    ys = [p.statistic for p in curve.points]
    ax.scatter(xs, ys, s=12, alpha=0.55, color="#555555", label="split statistics")
    g = curve.grid
    ax.plot(g, curve.fit_gcv(g), "--", color="#c0392b", lw=1.4, label="GCV fit")
    ax.plot(g, curve.fit_smooth(g), "-", color="#1a1a1a", lw=1.6, label="smooth fit")

    marks = [(curve.elbow_smooth, "elbow", "#2c7fb8", "-"),
             (curve.dip_smooth, "dip", "#41ab5d", ":")]
    for value, name, color, style in marks:
        if value is not None:
            ax.axvline(value, color=color, ls=style, lw=1.0)
            ax.annotate(f"{name} {value:.2f}", xy=(value, ax.get_ylim()[1]),
                        xytext=(2, -10), textcoords="offset points",
                        fontsize=8, color=color)
    ax.set_xlabel("number of communities K")
    ax.set_ylabel("statistic")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    meta = {"Description": dumps(config)} if config else None
    fig.savefig(path, format="svg", metadata=meta)
    plt.close(fig)


def flat_csv_text(payload: dict, config: dict | None = None) -> str:
    """One-row CSV of a flat result dict (nested values JSON-encoded)."""
    flat = {k: (dumps(v).replace("\n", " ") if isinstance(v, (dict, list)) else v)
            for k, v in payload.items()}
    buf = io.StringIO()
    buf.write(config_comment(config))
    w = csv.writer(buf)
    w.writerow(flat.keys())
    w.writerow(["" if v is None else v for v in flat.values()])
    return buf.getvalue()


def labels_csv_text(labels: np.ndarray, config: dict | None = None) -> str:
    """``node,label`` rows, 0-based node ids."""
    buf = io.StringIO()
    buf.write(config_comment(jsonable(config) if config else None))
    w = csv.writer(buf)
    w.writerow(["node", "label"])
    for i, lab in enumerate(np.asarray(labels)):
        w.writerow([i, int(lab)])
    return buf.getvalue()
