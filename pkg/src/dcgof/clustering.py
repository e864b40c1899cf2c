"""Regularized spectral clustering.

The adjacency is regularized implicitly, A_tau = A + (tau * dbar / n) 11',
never densified: matrix-vector products add a rank-one correction to the
sparse product.  Community labels come from k-means on the rows of the
leading eigenvectors of D_tau^{-1/2} A_tau D_tau^{-1/2}, with tiny
communities dissolved into their nearest surviving centroid.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import linear_sum_assignment

from .exceptions import DataError, NumericalError
from .graphs import SparseGraph
from .seeds import derive_seed, rng_from

__all__ = [
    "LabelVector",
    "SpectralEmbedding",
    "spectral_embed",
    "kmeans",
    "cluster",
    "SpectralClusterer",
    "label_agreement",
]


@dataclass
class LabelVector:
    """Community assignment in 1..K over a node index set."""

    labels: np.ndarray
    K: int
    node_index: np.ndarray
    requested_K: int | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.node_index = np.asarray(self.node_index, dtype=np.int64)

    def validate(self) -> None:
        if len(self.labels) != len(self.node_index):
            raise DataError("label vector length does not match its node index")
        if len(self.labels) and (self.labels.min() < 1 or self.labels.max() > self.K):
            raise DataError("label outside 1..K")


@dataclass
class SpectralEmbedding:
    vectors: np.ndarray       # n x K, columns orthonormal
    eigenvalues: np.ndarray   # sorted descending
    tau: float
    solver_iters: int | None = None


def _regularized_pieces(g: SparseGraph, tau: float):
    A = g.adjacency.astype(np.float64)
    n = g.n
    deg = np.asarray(A.sum(axis=1)).ravel()
    dbar = deg.mean() if n else 0.0
    reg = tau * dbar / n if n else 0.0
    d_tau = deg + tau * dbar
    inv_sqrt = np.zeros(n)
    pos = d_tau > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(d_tau[pos])
    return A, reg, inv_sqrt


def _normalized_operator(g: SparseGraph, tau: float) -> spla.LinearOperator:
    """Implicit D_tau^{-1/2} (A + reg * 11') D_tau^{-1/2} as a LinearOperator."""
    A, reg, inv_sqrt = _regularized_pieces(g, tau)

    def matvec(x):
        y = inv_sqrt * np.asarray(x).ravel()
        out = A @ y
        if reg:
            out = out + reg * y.sum()
        return inv_sqrt * out

    return spla.LinearOperator((g.n, g.n), matvec=matvec, rmatvec=matvec,
                               dtype=np.float64)


def _normalized_dense(g: SparseGraph, tau: float) -> np.ndarray:
    A, reg, inv_sqrt = _regularized_pieces(g, tau)
    M = A.toarray() + reg
    return M * np.outer(inv_sqrt, inv_sqrt)


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    # fix the sign indeterminacy so embeddings are reproducible
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def spectral_embed(g: SparseGraph, K: int, tau: float = 0.25,
                   solver: str = "auto", tol: float = 1e-8,
                   maxiter: int = 5000) -> SpectralEmbedding:
    """Top-K eigenvectors of the normalized regularized adjacency.

    ``solver`` is 'iterative' (implicitly restarted Lanczos on the implicit
    operator), 'dense', or 'auto' (dense for tiny graphs, otherwise iterative
    with a dense fallback for n <= 2000 if the iteration fails to converge).
    """
    n = g.n
    if K < 1 or K > n - 1:
        raise DataError(f"need 1 <= K <= n-1, got K={K}, n={n}")
    if tau < 0:
        raise DataError("regularization constant must be nonnegative")

    if solver == "auto":
        solver = "dense" if n <= 64 else "iterative"

    if solver == "dense":
        M = _normalized_dense(g, tau)
        vals, vecs = np.linalg.eigh(M)
        order = np.argsort(vals)[::-1][:K]
        return SpectralEmbedding(_canonical_signs(vecs[:, order]), vals[order],
                                 tau, solver_iters=0)

    if solver != "iterative":
        raise DataError(f"unknown solver {solver!r}")

    op = _normalized_operator(g, tau)
    v0 = rng_from(0x5EED).standard_normal(n)
    try:
        vals, vecs = spla.eigsh(op, k=K, which="LA", tol=tol, maxiter=maxiter, v0=v0)
    except spla.ArpackNoConvergence as exc:
        if n <= 2000:
            return spectral_embed(g, K, tau, solver="dense", tol=tol)
        resid = []
        if exc.eigenvalues is not None and len(exc.eigenvalues):
            for lam, v in zip(exc.eigenvalues, exc.eigenvectors.T):
                resid.append(float(np.linalg.norm(op @ v - lam * v)))
        raise NumericalError(
            f"eigensolver failed to converge after {maxiter} iterations; "
            f"partial residual norms: {resid}") from exc
    order = np.argsort(vals)[::-1]
    return SpectralEmbedding(_canonical_signs(vecs[:, order]), vals[order],
                             tau, solver_iters=None)


def _kmeans_pp_init(points, K, rng):
    m = len(points)
    centers = np.empty((K, points.shape[1]))
    centers[0] = points[rng.integers(m)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = d2.sum()
        if total <= 0:
            centers[k] = points[rng.integers(m)]
            continue
        centers[k] = points[np.searchsorted(np.cumsum(d2), rng.random() * total)]
        d2 = np.minimum(d2, np.sum((points - centers[k]) ** 2, axis=1))
    return centers


def _lloyd(points, centers, maxiter, tol):
    m, K = len(points), len(centers)
    prev_obj = np.inf
    assign = np.zeros(m, dtype=np.int64)
    for it in range(maxiter):
        d2 = (np.sum(points**2, axis=1)[:, None]
              - 2.0 * points @ centers.T
              + np.sum(centers**2, axis=1)[None, :])
        np.maximum(d2, 0.0, out=d2)
        assign = np.argmin(d2, axis=1)
        cur = d2[np.arange(m), assign]
        obj = float(cur.sum())
        cur = cur.copy()
        for k in range(K):
            mask = assign == k
            if mask.any():
                centers[k] = points[mask].mean(axis=0)
            else:
                # reseed an empty cluster at the farthest point
                far = int(np.argmax(cur))
                centers[k] = points[far]
                assign[far] = k
                cur[far] = -np.inf
        # Lloyd never increases the objective; treat violations as a bug
        if obj > prev_obj * (1 + 1e-9) + 1e-12:
            raise NumericalError("k-means objective increased")
        if prev_obj - obj <= tol * max(prev_obj, 1e-30):
            break
        prev_obj = obj
    d2 = (np.sum(points**2, axis=1)[:, None] - 2.0 * points @ centers.T
          + np.sum(centers**2, axis=1)[None, :])
    np.maximum(d2, 0.0, out=d2)
    assign = np.argmin(d2, axis=1)
    obj = float(d2[np.arange(m), assign].sum())
    return assign, centers, obj


def kmeans(points: np.ndarray, K: int, restarts: int = 20, seed: int = 0,
           maxiter: int = 100, tol: float = 1e-8):
    """Best-of-restarts Lloyd iterations from k-means++ starts.

    Returns (labels in 1..K, centers, objective); deterministic given seed.
    """
    points = np.asarray(points, dtype=np.float64)
    m = len(points)
    if m < K:
        raise DataError(f"k-means needs at least K={K} points, got {m}")
    best = None
    for r in range(restarts):
        rng = rng_from(derive_seed(seed, "kmeans", r))
        centers = _kmeans_pp_init(points, K, rng)
        assign, centers, obj = _lloyd(points, centers.copy(), maxiter, tol)
        if best is None or obj < best[2]:
            best = (assign, centers, obj)
    assign, centers, obj = best
    return assign + 1, centers, obj


def cluster(g: SparseGraph, K: int, tau: float = 0.25, min_frac: float = 0.1,
            restarts: int = 20, seed: int = 0, spherical: bool = False,
            solver: str = "auto") -> LabelVector:
    """Spectral embedding + k-means + small-community dissolution.

    Communities smaller than ``min_frac * n / K`` are dissolved and their
    members reassigned to the nearest surviving centroid; the result is
    relabeled to a contiguous 1..K' with K' <= K.
    """
    n = g.n
    if K == 1:
        return LabelVector(np.ones(n, dtype=np.int64), 1, np.arange(n), requested_K=1)
    emb = spectral_embed(g, K, tau=tau, solver=solver)
    pts = emb.vectors
    if spherical:
        norms = np.linalg.norm(pts, axis=1, keepdims=True)
        pts = np.where(norms > 0, pts / np.maximum(norms, 1e-300), pts)
    labels, centers, _ = kmeans(pts, K, restarts=restarts, seed=seed)

    sizes = np.bincount(labels - 1, minlength=K)
    floor = min_frac * n / K
    survivors = np.flatnonzero(sizes >= floor)
    if len(survivors) == 0:
        survivors = np.array([int(np.argmax(sizes))])
    if len(survivors) < K:
        d2 = (np.sum(pts**2, axis=1)[:, None]
              - 2.0 * pts @ centers[survivors].T
              + np.sum(centers[survivors] ** 2, axis=1)[None, :])
        nearest = survivors[np.argmin(d2, axis=1)] + 1
        dissolved = ~np.isin(labels - 1, survivors)
        labels = np.where(dissolved, nearest, labels)

    # contiguous relabeling by first occurrence
    out = np.zeros(n, dtype=np.int64)
    next_id = 0
    mapping: dict[int, int] = {}
    for i, lab in enumerate(labels):
        if lab not in mapping:
            next_id += 1
            mapping[int(lab)] = next_id
        out[i] = mapping[int(lab)]
    return LabelVector(out, next_id, np.arange(n), requested_K=K)


@dataclass
class SpectralClusterer:
    """Configured clustering operation with a small cache keyed on (graph, K).

    The cache lets sequential tests and repeated splits reuse the row labels
    computed on the same graph object.
    """

    tau: float = 0.25
    min_frac: float = 0.1
    restarts: int = 20
    spherical: bool = False
    solver: str = "auto"
    seed: int = 0
    cache_size: int = 64
    _cache: OrderedDict = field(default_factory=OrderedDict, repr=False)

    def labels(self, g: SparseGraph, K: int) -> LabelVector:
        key = (id(g), K)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is g:
            self._cache.move_to_end(key)
            return hit[1]
        lv = cluster(g, K, tau=self.tau, min_frac=self.min_frac,
                     restarts=self.restarts, seed=derive_seed(self.seed, "cluster", K),
                     spherical=self.spherical, solver=self.solver)
        self._cache[key] = (g, lv)
        while len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return lv

    def settings(self) -> dict:
        return {"tau": self.tau, "min_frac": self.min_frac,
                "restarts": self.restarts, "spherical": self.spherical,
                "solver": self.solver, "clusterer_seed": self.seed}

    def clear_cache(self) -> None:
        self._cache.clear()


def label_agreement(a: np.ndarray, b: np.ndarray) -> float:
    """Fraction of matching labels under the best label permutation."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if len(a) != len(b):
        raise DataError("label vectors of different lengths")
    ka, kb = a.max(), b.max()
    conf = np.zeros((ka, kb))
    np.add.at(conf, (a - 1, b - 1), 1.0)
    rows, cols = linear_sum_assignment(-conf)
    return float(conf[rows, cols].sum() / len(a))
