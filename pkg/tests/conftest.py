import io

import numpy as np
import pytest
import scipy.sparse as sp

from dcgof import (DcsbmParams, SparseGraph, load_graph, make_connectivity,
                   sample_dcsbm, sample_labels, scale_to_expected_degree)


def graph_from_dense(A) -> SparseGraph:
    A = np.asarray(A, dtype=np.int64)
    g = SparseGraph(n=A.shape[0], adjacency=sp.csr_matrix(A),
                    edge_sum=int(np.triu(A, 1).sum()))
    g.validate()
    return g


def random_graph(n, p, rng) -> SparseGraph:
    up = np.triu((rng.random((n, n)) < p).astype(np.int64), 1)
    return graph_from_dense(up + up.T)


def planted_graph(n, K, beta, lam, seed, theta=None, dist="poisson"):
    """Planted-partition block-model sample plus its true labels."""
    z = sample_labels(n, np.ones(K) / K, seed=seed)
    theta = np.ones(n) if theta is None else theta
    B = scale_to_expected_degree(make_connectivity("B1", K, beta=beta), z, theta, lam)
    g = sample_dcsbm(DcsbmParams(K=K, B=B, z=z, theta=theta, dist=dist), seed=seed + 1)
    return g, z


@pytest.fixture
def path3():
    return load_graph(io.StringIO("1 2\n2 3\n"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
