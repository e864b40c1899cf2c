"""Sparse symmetric graphs: ingestion, degree statistics, reduction, splitting.

The adjacency matrix is stored in CSR form with nonnegative integer entries,
zero diagonal and exact symmetry.  Entries may exceed 1 (multi-edges arise
naturally under Poisson sampling); simple binary graphs are a special case.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.io import mmread

from .exceptions import DataError, NumericalError
from .seeds import rng_from

__all__ = [
    "SparseGraph",
    "NodeSplit",
    "DegreeSummary",
    "load_graph",
    "degree_summary",
    "nearest_rank_quantile",
    "reduce_by_degree_quantile",
    "random_split",
]


@dataclass(eq=False)
class SparseGraph:
    """Symmetric nonnegative-integer adjacency with zero diagonal."""

    n: int
    adjacency: sp.csr_matrix
    edge_sum: int
    is_symmetric: bool = True
    meta: dict = field(default_factory=dict)

    def degrees(self) -> np.ndarray:
        """Row sums of the adjacency (weighted degrees)."""
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def average_degree(self) -> float:
        return float(self.degrees().mean()) if self.n else 0.0

    def validate(self, full: bool = True) -> None:
        """Check the structural invariants; raise DataError on violation."""
        A = self.adjacency
        if A.shape != (self.n, self.n):
            raise DataError("adjacency shape does not match node count")
        if A.nnz and A.data.min() < 0:
            raise DataError("negative adjacency entry")
        if A.diagonal().any():
            raise DataError("nonzero diagonal entry")
        if full:
            if (A != A.T).nnz != 0:
                raise DataError("adjacency is not symmetric")
            if A.nnz and not np.all(A.data == np.round(A.data)):
                raise DataError("non-integer adjacency entry")

    def subgraph(self, nodes: np.ndarray) -> "SparseGraph":
        """Induced subgraph on ``nodes`` with indices remapped to 0..len-1."""
        nodes = np.asarray(nodes, dtype=np.int64)
        sub = self.adjacency[nodes][:, nodes].tocsr()
        edge_sum = int(sp.triu(sub, k=1).sum())
        return SparseGraph(n=len(nodes), adjacency=sub, edge_sum=edge_sum)


@dataclass(frozen=True)
class NodeSplit:
    """Random bipartition of the node set; s1 and s2 are sorted and disjoint."""

    s1: np.ndarray
    s2: np.ndarray
    seed: int


@dataclass(frozen=True)
class DegreeSummary:
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float

    def to_dict(self, n: int | None = None) -> dict:
        out = {} if n is None else {"n": n}
        out.update(
            min=self.min, q1=self.q1, median=self.median,
            mean=self.mean, q3=self.q3, max=self.max,
        )
        return out


def _finalize(n, rows, cols, vals, symmetrize, drop_self_loops):
    """Assemble a SparseGraph from raw COO entries, enforcing the invariants."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.int64)

    loop_mask = rows == cols
    n_loops = int(loop_mask.sum())
    if n_loops:
        if not drop_self_loops:
            raise DataError(f"{n_loops} self-loop(s) present; the model requires a zero diagonal")
        keep = ~loop_mask
        rows, cols, vals = rows[keep], cols[keep], vals[keep]

    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    if symmetrize:
        A = (A + A.T).tocsr()
    elif (A != A.T).nnz != 0:
        raise DataError("input matrix is not symmetric (pass symmetrize to fold it)")
    A.eliminate_zeros()
    A.sort_indices()

    g = SparseGraph(
        n=n,
        adjacency=A,
        edge_sum=int(sp.triu(A, k=1).sum()),
        meta={"dropped_self_loops": n_loops},
    )
    g.validate()
    return g


def _parse_edge_list(text: str, index_base: int):
    rows, cols, vals = [], [], []
    max_idx = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise DataError(f"line {lineno}: expected 'u v [w]', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = int(parts[2]) if len(parts) == 3 else 1
        except ValueError:
            raise DataError(f"line {lineno}: non-integer token in {raw!r}") from None
        if w < 0:
            raise DataError(f"line {lineno}: negative edge weight {w}")
        u -= index_base
        v -= index_base
        if u < 0 or v < 0:
            raise DataError(f"line {lineno}: node index below the declared index base")
        rows.append(u)
        cols.append(v)
        vals.append(w)
        max_idx = max(max_idx, u, v)
    return rows, cols, vals, max_idx + 1


def load_graph(
    source,
    format: str = "edge-list",
    index_base: int = 1,
    symmetrize: bool | None = None,
    drop_self_loops: bool = True,
    n: int | None = None,
) -> SparseGraph:
    """Read a graph from an edge list or a Matrix Market coordinate file.

    ``source`` may be a filesystem path, an open stream, or a bytes payload;
    wrap literal edge-list text in ``io.StringIO``.  Edge lists are
    whitespace-separated ``u v [w]`` lines with ``#`` comments; ``index_base``
    selects 0- or 1-based node ids.  Matrix Market files with ``coordinate
    {pattern,integer} symmetric`` headers are accepted.  Unless ``symmetrize``
    is set explicitly, edge lists are folded (entries (i,j) and (j,i) summed)
    and Matrix Market input is required to be symmetric as read.
    """
    if format == "edge-list":
        if hasattr(source, "read"):
            text = source.read()
            if isinstance(text, bytes):
                text = text.decode("utf-8")
        elif isinstance(source, bytes):
            text = source.decode("utf-8")
        else:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        rows, cols, vals, n_seen = _parse_edge_list(text, index_base)
        n_nodes = n if n is not None else n_seen
        if n_seen > (n_nodes or 0) and n is not None:
            raise DataError(f"node index {n_seen - 1} outside declared range n={n}")
        sym = True if symmetrize is None else symmetrize
        return _finalize(n_nodes, rows, cols, vals, sym, drop_self_loops)

    if format == "matrix-market":
        try:
            if isinstance(source, bytes):
                source = io.BytesIO(source)
            M = sp.coo_matrix(mmread(source))
        except Exception as exc:  # scipy raises bare ValueError with context
            raise DataError(f"matrix-market parse failure: {exc}") from exc
        if M.shape[0] != M.shape[1]:
            raise DataError("matrix-market input is not square")
        if M.nnz and not np.allclose(M.data, np.round(M.data)):
            raise DataError("matrix-market input has non-integer entries")
        n_nodes = n if n is not None else M.shape[0]
        sym = False if symmetrize is None else symmetrize
        return _finalize(n_nodes, M.row, M.col, np.round(M.data).astype(np.int64),
                         sym, drop_self_loops)

    raise DataError(f"unknown graph format {format!r}")


def nearest_rank_quantile(values: np.ndarray, q: float) -> float:
    """Nearest-rank empirical quantile: the ceil(q*n)-th order statistic."""
    values = np.sort(np.asarray(values))
    if len(values) == 0:
        raise DataError("quantile of empty sequence")
    if not 0 < q <= 1:
        raise DataError(f"quantile level {q} outside (0, 1]")
    rank = int(np.ceil(q * len(values)))
    return float(values[rank - 1])


def degree_summary(g: SparseGraph) -> DegreeSummary:
    """Five-number degree summary plus the mean, quartiles by nearest rank."""
    if g.n < 1:
        raise DataError("degree summary of an empty graph")
    d = g.degrees()
    return DegreeSummary(
        min=float(d.min()),
        q1=nearest_rank_quantile(d, 0.25),
        median=nearest_rank_quantile(d, 0.5),
        mean=float(d.mean()),
        q3=nearest_rank_quantile(d, 0.75),
        max=float(d.max()),
    )


def reduce_by_degree_quantile(g: SparseGraph, q: float) -> SparseGraph:
    """Induced subgraph on nodes with degree strictly below the q-quantile.

    The quantile is computed once on the original degree sequence; surviving
    isolated nodes are kept and indices are remapped to a contiguous range.
    """
    d = g.degrees()
    cutoff = nearest_rank_quantile(d, q)
    keep = np.flatnonzero(d < cutoff)
    if len(keep) == 0:
        raise DataError("empty reduction: no node has degree below the quantile")
    out = g.subgraph(keep)
    out.meta["kept_nodes"] = keep
    out.meta["degree_cutoff"] = cutoff
    return out


def random_split(n: int, seed: int, max_retries: int = 16) -> NodeSplit:
    """Bipartition [n] by independent fair coin flips, both sides nonempty.

    A degenerate draw (one side empty) is resampled up to ``max_retries``
    times from the same stream; this only matters for tiny n.
    """
    if n < 2:
        raise DataError("random_split needs at least two nodes")
    rng = rng_from(seed)
    for _ in range(max_retries):
        mask = rng.random(n) < 0.5
        if mask.any() and not mask.all():
            return NodeSplit(
                s1=np.flatnonzero(mask).astype(np.int64),
                s2=np.flatnonzero(~mask).astype(np.int64),
                seed=int(seed),
            )
    raise NumericalError(f"random_split degenerate after {max_retries} retries")
