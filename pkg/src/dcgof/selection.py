"""Sequential model selection and community profiles.

Selection tests K = K_min, K_min+1, ... and stops at the first value whose
goodness-of-fit test is not rejected; the profile instead records the
subsampled statistic across many random splits for every K, fits smoothing
splines at two smoothness levels, and locates the elbow (curvature peak) and
dip (first sign change of the slope to positive) of each fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .baselines import bic_score
from .clustering import SpectralClusterer
from .exceptions import DataError
from .graphs import SparseGraph
from .network_tests import bootstrap_debias, nac_full, snac
from .seeds import derive_seed
from .smoothing import SmoothingSpline, fit_smoothing_spline

__all__ = [
    "SelectionResult",
    "ProfilePoint",
    "ProfileCurve",
    "select_k",
    "select_k_bic",
    "profile_points",
    "build_profile",
    "find_elbow_dip",
]

_TEST_METHODS = ("snac+", "snac", "nac+", "nac")


@dataclass
class SelectionResult:
    chosen_K: int
    tested_Ks: list
    statistics: list
    p_values: list
    alpha: float | None
    censored: bool
    method: str

    def to_dict(self) -> dict:
        return {
            "chosen_K": self.chosen_K,
            "tested_Ks": list(self.tested_Ks),
            "statistics": [float(s) for s in self.statistics],
            "p_values": None if self.p_values is None
            else [None if p is None else float(p) for p in self.p_values],
            "alpha": self.alpha,
            "censored": self.censored,
            "method": self.method,
        }


@dataclass(frozen=True)
class ProfilePoint:
    K: int
    statistic: float
    split_seed: int


@dataclass
class ProfileCurve:
    points: list
    fit_gcv: SmoothingSpline
    fit_smooth: SmoothingSpline
    grid: np.ndarray
    elbow_gcv: float
    dip_gcv: float | None
    elbow_smooth: float
    dip_smooth: float | None
    meta: dict = field(default_factory=dict)


def _one_statistic(g, K, method, clusterer, seed, boot):
    if method == "snac+":
        return snac(g, K, "plus", clusterer, seed=seed)
    if method == "snac":
        return snac(g, K, "plain", clusterer, seed=seed)
    if method in ("nac+", "nac"):
        variant = "plus" if method == "nac+" else "plain"
        if boot < 2:
            raise DataError(
                f"{method} has no calibrated threshold without bootstrap "
                "debiasing; pass a replicate count of at least 2")
        label = "NAC+" if variant == "plus" else "NAC"

        def base(graph, s):
            return nac_full(graph, K, variant, clusterer, seed=s).statistic

        return bootstrap_debias(g, K, base, J=boot, seed=seed,
                                clusterer=clusterer, method_label=label)
    raise DataError(f"method {method!r} has no calibrated threshold for "
                    "sequential testing")


def select_k(
    g: SparseGraph,
    K_max: int,
    K_min: int = 1,
    method: str = "snac+",
    alpha: float = 1e-6,
    seed: int = 0,
    clusterer: SpectralClusterer | None = None,
    boot: int = 0,
) -> SelectionResult:
    """Sequential testing from below: stop at the first non-rejected K.

    Rejection compares the statistic against the upper normal quantile at
    ``alpha``.  If every K up to K_max is rejected the result is censored at
    K_max.  Clusterings are cached and reused across successive K.
    """
    if K_min > K_max:
        raise DataError("K_min must not exceed K_max")
    method = method.lower()
    if method not in _TEST_METHODS:
        raise DataError(f"method {method!r} has no calibrated threshold")
    clusterer = clusterer or SpectralClusterer()
    threshold = float(norm.ppf(1.0 - alpha))

    tested, stats_out, pvals = [], [], []
    for K in range(K_min, K_max + 1):
        outcome = _one_statistic(g, K, method, clusterer,
                                 derive_seed(seed, "select", K), boot)
        tested.append(K)
        stats_out.append(float(outcome.statistic))
        pvals.append(outcome.p_value)
        if outcome.statistic <= threshold:
            return SelectionResult(K, tested, stats_out, pvals, alpha,
                                   censored=False, method=outcome.method)
    return SelectionResult(K_max, tested, stats_out, pvals, alpha,
                           censored=True, method=method.upper())


def select_k_bic(
    g: SparseGraph,
    K_max: int,
    K_min: int = 1,
    seed: int = 0,
    clusterer: SpectralClusterer | None = None,
) -> SelectionResult:
    """Pick K maximizing the penalized likelihood score over a range."""
    if K_min > K_max:
        raise DataError("K_min must not exceed K_max")
    clusterer = clusterer or SpectralClusterer()
    Ks = list(range(K_min, K_max + 1))
    scores = [bic_score(g, K, clusterer, seed=seed) for K in Ks]
    chosen = Ks[int(np.argmax(scores))]
    return SelectionResult(chosen, Ks, scores, None, None,
                           censored=False, method="BIC")


def _profile_task(g, K, clusterer, seed, zhat):
    res = snac(g, K, "plus", clusterer, seed=seed, zhat=zhat)
    return ProfilePoint(K=K, statistic=float(res.statistic),
                        split_seed=res.split.seed)


def profile_points(
    g: SparseGraph,
    Ks,
    repeats: int = 20,
    seed: int = 0,
    clusterer: SpectralClusterer | None = None,
    threads: int = 1,
) -> list:
    """One subsampled plus-variant statistic per (K, random split).

    The row clustering for each K is computed once and shared across the
    ``repeats`` splits; only the split and the column fit vary.  Splits are
    independent given their derived seeds, so with ``threads > 1`` they are
    evaluated in a worker pool.
    """
    if repeats < 2:
        raise DataError("profiles need at least 2 repeats per K")
    clusterer = clusterer or SpectralClusterer()
    jobs = []
    for K in Ks:
        zhat = clusterer.labels(g, int(K))
        for r in range(repeats):
            jobs.append((int(K), derive_seed(seed, "profile", int(K), r), zhat))
    if threads > 1:
        from joblib import Parallel, delayed

        return Parallel(n_jobs=threads)(
            delayed(_profile_task)(g, K, clusterer, s, zhat)
            for K, s, zhat in jobs)
    return [_profile_task(g, K, clusterer, s, zhat) for K, s, zhat in jobs]


def find_elbow_dip(fit: SmoothingSpline, k_lo: float, k_hi: float,
                   step: float = 0.01, tol: float = 1e-9) -> dict:
    """Locate the curvature peak and the first upturn of a fitted profile.

    The elbow is the grid argmax of the second derivative; the dip is the
    first grid point where the first derivative turns positive after having
    been genuinely negative (strict sign change, guarding against flat
    segments).  The dip is absent when the slope never turns positive.
    """
    grid = np.arange(k_lo, k_hi + step / 2, step)
    d1 = fit(grid, deriv=1)
    d2 = fit(grid, deriv=2)
    elbow = float(grid[int(np.argmax(d2))])

    dip = None
    was_negative = False
    for t, slope in zip(grid, d1):
        if slope < -tol:
            was_negative = True
        elif slope > tol and was_negative:
            dip = float(t)
            break
    return {"elbow": elbow, "dip": dip}


def build_profile(points, grid_step: float = 0.01,
                  smoothness: float = 0.3) -> ProfileCurve:
    """Fit both smoothing levels to profile points and locate their features."""
    x = np.array([p.K for p in points], dtype=np.float64)
    y = np.array([p.statistic for p in points], dtype=np.float64)
    fit_gcv = fit_smoothing_spline(x, y, mode="gcv")
    fit_smooth = fit_smoothing_spline(x, y, mode="fixed", smoothness=smoothness)
    k_lo, k_hi = float(x.min()), float(x.max())
    grid = np.arange(k_lo, k_hi + grid_step / 2, grid_step)
    feat_g = find_elbow_dip(fit_gcv, k_lo, k_hi, step=grid_step)
    feat_s = find_elbow_dip(fit_smooth, k_lo, k_hi, step=grid_step)
    return ProfileCurve(
        points=list(points), fit_gcv=fit_gcv, fit_smooth=fit_smooth, grid=grid,
        elbow_gcv=feat_g["elbow"], dip_gcv=feat_g["dip"],
        elbow_smooth=feat_s["elbow"], dip_smooth=feat_s["dip"],
        meta={"smoothness": smoothness,
              "elbow_gcv_nearest_int": int(round(feat_g["elbow"])),
              "elbow_smooth_nearest_int": int(round(feat_s["elbow"]))},
    )
