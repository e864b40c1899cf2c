"""Block estimates, Poisson likelihood, BIC/LR, adjusted spectral statistic."""

import io

import numpy as np
import pytest
import scipy.sparse as sp

from dcgof import (LabelVector, NumericalError, SpectralClusterer,
                   as_statistic, bic_score, dcsbm_loglik, fit_block_estimates,
                   load_graph, lr_statistic, select_k_bic)
from dcgof.baselines import _adjusted_dense, _adjusted_operator

from conftest import graph_from_dense, planted_graph, random_graph
from oracles import dense_adjusted_matrix, dense_dcsbm_loglik


def lv(labels, K=None):
    labels = np.asarray(labels, dtype=np.int64)
    K = int(labels.max()) if K is None else K
    return LabelVector(labels=labels, K=K, node_index=np.arange(len(labels)))


class TestBlockEstimates:
    def test_hand_example(self):
        g = load_graph(io.StringIO("1 2\n3 4\n1 3\n"))
        est = fit_block_estimates(g, lv([1, 1, 2, 2]))
        assert est.B_hat[0, 0] == pytest.approx(1.0)
        assert est.B_hat[1, 1] == pytest.approx(1.0)
        assert est.B_hat[0, 1] == pytest.approx(0.25)
        assert np.allclose(est.theta_hat, [4 / 3, 2 / 3, 4 / 3, 2 / 3])
        assert np.allclose(est.pi_hat, [0.5, 0.5])

    def test_regular_graph_unit_theta(self):
        A = 1 - np.eye(6, dtype=np.int64)
        est = fit_block_estimates(graph_from_dense(A), lv(np.ones(6)))
        assert np.allclose(est.theta_hat, 1.0)

    def test_theta_sums_to_community_sizes(self, rng):
        for _ in range(5):
            g = random_graph(80, 0.1, rng)
            labels = rng.integers(1, 4, size=80)
            est = fit_block_estimates(g, lv(labels, K=3))
            for k in range(1, 4):
                mask = labels == k
                assert est.theta_hat[mask].sum() == pytest.approx(mask.sum(), abs=1e-10)

    def test_B_symmetric_exact(self, rng):
        g = random_graph(60, 0.15, rng)
        est = fit_block_estimates(g, lv(rng.integers(1, 4, size=60), K=3))
        assert np.array_equal(est.B_hat, est.B_hat.T)

    def test_degenerate_community_flagged(self):
        A = np.zeros((4, 4), dtype=np.int64)
        A[0, 1] = A[1, 0] = 1
        est = fit_block_estimates(graph_from_dense(A), lv([1, 1, 2, 2]))
        assert est.degenerate_communities == [2]
        assert np.allclose(est.theta_hat[2:], 1.0)


class TestLoglik:
    def test_empty_graph(self):
        g = graph_from_dense(np.zeros((5, 5)))
        zhat = lv(np.ones(5))
        est = fit_block_estimates(g, zhat)
        assert dcsbm_loglik(g, est, zhat) == pytest.approx(0.0)

    def test_prior_term_balanced(self):
        g, _ = planted_graph(100, 2, beta=0.2, lam=10, seed=3)
        labels = np.repeat([1, 2], 50)
        zhat = lv(labels)
        est = fit_block_estimates(g, zhat)
        ll = dcsbm_loglik(g, est, zhat)
        # subtracting the edge terms leaves exactly the label prior term
        z = labels - 1
        theta = est.theta_hat
        up = sp.triu(g.adjacency, 1).tocoo()
        lam = theta[up.row] * theta[up.col] * est.B_hat[z[up.row], z[up.col]]
        T = np.bincount(z, weights=theta)
        V = np.bincount(z, weights=theta**2)
        mean_term = 0.5 * (T @ est.B_hat @ T - np.diag(est.B_hat) @ V)
        prior = ll - float(np.sum(up.data * np.log(lam))) + mean_term
        assert prior == pytest.approx(100 * np.log(0.5))

    @pytest.mark.parametrize("trial", range(4))
    def test_matches_pair_loop_oracle(self, trial, rng):
        n = int(rng.integers(40, 200))
        g = random_graph(n, 0.1, rng)
        labels = rng.integers(1, 4, size=n)
        labels[:3] = [1, 2, 3]
        zhat = lv(labels, K=3)
        est = fit_block_estimates(g, zhat)
        fast = dcsbm_loglik(g, est, zhat)
        slow = dense_dcsbm_loglik(g.adjacency.toarray(), est.B_hat,
                                  est.theta_hat, est.pi_hat, labels)
        assert fast == pytest.approx(slow, abs=1e-8)


class TestBicLr:
    def test_penalty_value(self):
        g, _ = planted_graph(100, 2, beta=0.2, lam=10, seed=5)
        clusterer = SpectralClusterer()
        zhat = clusterer.labels(g, 2)
        ll = dcsbm_loglik(g, fit_block_estimates(g, zhat), zhat)
        bic = bic_score(g, 2, clusterer)
        assert ll - bic == pytest.approx(3 * np.log(100))
        assert 3 * np.log(100) == pytest.approx(13.8155, abs=1e-4)

    def test_lr_deterministic(self):
        g, _ = planted_graph(300, 2, beta=0.1, lam=15, seed=6)
        a = lr_statistic(g, 2, SpectralClusterer(), seed=1)
        b = lr_statistic(g, 2, SpectralClusterer(), seed=1)
        assert a == b

    def test_bic_argmax_recovers_K(self):
        hits = 0
        for rep in range(10):
            g, _ = planted_graph(600, 3, beta=0.15, lam=25, seed=700 + 3 * rep)
            res = select_k_bic(g, K_max=5, seed=rep)
            hits += res.chosen_K == 3
        assert hits >= 9


class TestAdjustedSpectral:
    def test_matvec_matches_dense(self, rng):
        for n in (60, 150, 300):
            g = random_graph(n, 0.1, rng)
            labels = rng.integers(1, 3, size=n)
            labels[:2] = [1, 2]
            zhat = lv(labels, K=2)
            est = fit_block_estimates(g, zhat)
            op = _adjusted_operator(g, est, zhat)
            M = dense_adjusted_matrix(g.adjacency.toarray(), est.B_hat,
                                      est.theta_hat, labels)
            x = rng.standard_normal(n)
            assert np.max(np.abs(op @ x - M @ x)) <= 1e-8
            assert np.max(np.abs(_adjusted_dense(g, est, zhat) - M)) <= 1e-12

    def test_relabeling_invariance(self):
        g, z = planted_graph(200, 2, beta=0.1, lam=15, seed=31)
        a = as_statistic_with_labels(g, z)
        perm = np.array([2, 1])
        b = as_statistic_with_labels(g, perm[z - 1])
        assert a == pytest.approx(b, abs=1e-9)

    def test_variance_degenerate_at_edge(self):
        g, z = planted_graph(50, 2, beta=0.2, lam=8, seed=8)
        zhat = lv(z)
        est = fit_block_estimates(g, zhat)
        est.B_hat = np.zeros_like(est.B_hat)
        with pytest.raises(NumericalError, match="degenerate"):
            _adjusted_operator(g, est, zhat)

    def test_sigma1_near_wigner_edge(self):
        # one-block Poisson graph, n = 2000, p = 0.05: the standardized
        # residual spectrum edge sits near 2
        from dcgof import DcsbmParams, sample_dcsbm
        vals = []
        for rep in range(20):
            params = DcsbmParams(K=1, B=np.array([[0.05]]),
                                 z=np.ones(2000, dtype=np.int64),
                                 theta=np.ones(2000))
            g = sample_dcsbm(params, seed=5000 + rep)
            out = as_statistic(g, 1, "SBM", seed=rep)
            vals.append(out.metadata["sigma1"])
        assert all(1.8 <= v <= 2.3 for v in vals)

    def test_outcome_shape(self):
        g, _ = planted_graph(150, 2, beta=0.1, lam=12, seed=17)
        out = as_statistic(g, 2, "DCSBM", seed=0)
        assert out.method == "AS"
        assert out.p_value is None
        n23 = 150 ** (2 / 3)
        assert out.statistic == pytest.approx(
            n23 * (out.metadata["sigma1"] - 2.0))


def as_statistic_with_labels(g, labels):
    """AS statistic evaluated at supplied labels (bypasses the clusterer)."""
    from dcgof.baselines import _adjusted_operator, fit_block_estimates
    import scipy.sparse.linalg as spla
    from dcgof.seeds import rng_from

    zhat = lv(labels)
    est = fit_block_estimates(g, zhat)
    op = _adjusted_operator(g, est, zhat)
    v0 = rng_from(1).standard_normal(g.n)
    return float(spla.svds(op, k=1, v0=v0, return_singular_vectors=False)[0])
