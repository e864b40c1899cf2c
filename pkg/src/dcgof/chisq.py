"""Adjusted chi-square statistic for groups of multinomial observations.

Rows of a count matrix are multinomial draws; rows sharing a group label are
hypothesized to share a probability vector.  The raw chi-square aggregates
``psi(x, e) = (x - e)^2 / e`` against pooled (or supplied) group
probabilities, and the adjusted statistic recenters/rescales it so that it is
approximately standard normal when the number of rows is large while the
per-row totals stay moderate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .exceptions import DataError
from .seeds import rng_from

__all__ = [
    "CompressedCounts",
    "AcResult",
    "GroupChiSquare",
    "chi_square_groups",
    "ac_adjust",
    "ac_test",
    "harmonic_mean",
    "group_omega",
    "chi_square_null_reference",
]


@dataclass
class CompressedCounts:
    """Row-compressed multinomial counts.

    ``X`` is m x L with nonnegative integer entries, ``d`` holds the row
    totals, and ``groups`` assigns each row to one of ``K`` groups (labels in
    1..K).
    """

    X: np.ndarray
    d: np.ndarray
    groups: np.ndarray
    L: int
    K: int

    def __post_init__(self):
        self.X = np.asarray(self.X)
        self.d = np.asarray(self.d)
        self.groups = np.asarray(self.groups, dtype=np.int64)

    def validate(self) -> None:
        if self.X.shape != (len(self.d), self.L):
            raise DataError("count matrix shape inconsistent with d and L")
        if self.X.min(initial=0) < 0:
            raise DataError("negative count")
        if not np.array_equal(self.X.sum(axis=1), self.d):
            raise DataError("row sums of X do not match d")
        if len(self.groups) != len(self.d):
            raise DataError("group vector length mismatch")
        if self.groups.size and (self.groups.min() < 1 or self.groups.max() > self.K):
            raise DataError("group label outside 1..K")


@dataclass
class AcResult:
    """Raw and adjusted chi-square values plus finite-sample diagnostics."""

    y_stat: float
    t_stat: float
    gamma: float
    n_effective: int
    harmonic_mean_d: float
    omega_n: float
    pooled: np.ndarray | None = None
    degenerate_groups: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "y_stat": self.y_stat,
            "t_stat": self.t_stat,
            "gamma": self.gamma,
            "n_effective": self.n_effective,
            "harmonic_mean_d": self.harmonic_mean_d,
            "omega_n": self.omega_n,
        }


class GroupChiSquare(NamedTuple):
    y_stat: float
    pooled: np.ndarray
    n_effective: int
    degenerate_groups: list


def chi_square_groups(
    counts: CompressedCounts,
    probs: np.ndarray | None = None,
    count_zero_rows: bool = False,
) -> GroupChiSquare:
    """Raw group chi-square with pooled or supplied probabilities.

    Zero-degree rows contribute nothing and are excluded from the effective
    row count unless ``count_zero_rows`` restores literal counting.  Groups
    whose total degree is zero are skipped and reported as degenerate.
    The sum is accumulated with ``math.fsum``, so it is exactly invariant
    under permutations of group or category labels.
    """
    counts.validate()
    X = counts.X.astype(np.float64, copy=False)
    d = counts.d.astype(np.float64, copy=False)
    gidx = counts.groups - 1
    K, L = counts.K, counts.L

    if probs is None:
        pooled = np.zeros((K, L))
        np.add.at(pooled, gidx, X)
        group_deg = np.bincount(gidx, weights=d, minlength=K)
        live = group_deg > 0
        pooled[live] /= group_deg[live, None]
        degenerate = [int(k + 1) for k in np.flatnonzero(~live)
                      if np.any(gidx == k)]
    else:
        pooled = np.asarray(probs, dtype=np.float64)
        if pooled.shape != (K, L):
            raise DataError(f"probs shape {pooled.shape} != ({K}, {L})")
        if pooled.min() < 0 or np.max(np.abs(pooled.sum(axis=1) - 1.0)) > 1e-12:
            raise DataError("probs rows must lie on the probability simplex")
        degenerate = []

    expected = d[:, None] * pooled[gidx]
    zero = expected == 0.0
    if np.any(zero & (X > 0)):
        raise DataError("positive count where the expected count is zero")
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = np.square(X - expected) / expected
    psi[zero] = 0.0

    y = math.fsum(psi.ravel())
    n_eff = len(d) if count_zero_rows else int(np.count_nonzero(counts.d))
    return GroupChiSquare(y, pooled, n_eff, degenerate)


def ac_adjust(y: float, n_effective: int, L: int) -> float:
    """Adjusted statistic (y / gamma - gamma) / sqrt(2), gamma^2 = n(L-1)."""
    if L < 2:
        raise DataError("adjusted chi-square undefined for a single category")
    if n_effective < 1:
        raise DataError("adjusted chi-square needs at least one effective row")
    gamma = math.sqrt(n_effective * (L - 1))
    return (y / gamma - gamma) / math.sqrt(2.0)


def harmonic_mean(d: np.ndarray) -> float:
    """Harmonic mean of a positive sequence."""
    d = np.asarray(d, dtype=np.float64)
    if len(d) == 0:
        raise DataError("harmonic mean of empty sequence")
    if d.min() <= 0:
        raise DataError("harmonic mean requires strictly positive entries")
    return float(len(d) / np.sum(1.0 / d))


def group_omega(counts: CompressedCounts) -> float:
    """min over groups of (group fraction) x (group mean total)."""
    m = len(counts.d)
    if m == 0:
        raise DataError("omega of empty counts")
    gidx = counts.groups - 1
    sizes = np.bincount(gidx, minlength=counts.K)
    sums = np.bincount(gidx, weights=counts.d.astype(np.float64), minlength=counts.K)
    live = sizes > 0
    if not live.any():
        raise DataError("omega needs at least one nonempty group")
    # pi_k * mean_k = (n_k / m) * (sum_k / n_k) = sum_k / m
    return float(np.min(sums[live]) / m)


def ac_test(
    counts: CompressedCounts,
    probs: np.ndarray | None = None,
    count_zero_rows: bool = False,
) -> AcResult:
    """Full pipeline: raw statistic, adjustment, and diagnostics."""
    y, pooled, n_eff, degenerate = chi_square_groups(counts, probs, count_zero_rows)
    t = ac_adjust(y, n_eff, counts.L)
    pos = counts.d > 0
    return AcResult(
        y_stat=y,
        t_stat=t,
        gamma=math.sqrt(n_eff * (counts.L - 1)),
        n_effective=n_eff,
        harmonic_mean_d=harmonic_mean(counts.d[pos]) if pos.any() else float("nan"),
        omega_n=group_omega(counts),
        pooled=pooled,
        degenerate_groups=degenerate,
    )


def chi_square_null_reference(
    n: int,
    L: int,
    d,
    reps: int,
    seed: int,
    p: np.ndarray | None = None,
) -> float:
    """KS distance of the simulated null adjusted statistic to N(0, 1).

    Simulates ``reps`` single-group datasets of n independent Mult(d_i, p)
    rows (uniform p by default) and returns the sup-distance between the
    empirical CDF of the adjusted statistic and the standard normal CDF.
    """
    if reps < 100:
        raise DataError("null reference needs at least 100 replicates")
    d = np.broadcast_to(np.asarray(d, dtype=np.int64), (n,))
    if p is None:
        p = np.full(L, 1.0 / L)
    p = np.asarray(p, dtype=np.float64)
    rng = rng_from(seed)
    groups = np.ones(n, dtype=np.int64)
    stats_out = np.empty(reps)
    for r in range(reps):
        X = np.vstack([rng.multinomial(di, p) for di in d]) if len(set(d.tolist())) > 1 \
            else rng.multinomial(int(d[0]), p, size=n)
        counts = CompressedCounts(X=X, d=X.sum(axis=1), groups=groups, L=L, K=1)
        stats_out[r] = ac_test(counts).t_stat
    return float(stats.kstest(stats_out, "norm").statistic)
