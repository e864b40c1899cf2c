"""Independent brute-force reference implementations.

Everything here is written as plain loops over dense arrays, deliberately
ignoring the sparse fast paths in the package, so agreement between the two
is meaningful evidence of correctness.
"""

import numpy as np


def dense_column_compress(A_sub, yhat_labels, L):
    """Triple-loop column compression of a dense submatrix."""
    m, c = A_sub.shape
    X = np.zeros((m, L), dtype=np.int64)
    for i in range(m):
        for j in range(c):
            X[i, yhat_labels[j] - 1] += A_sub[i, j]
    return X


def dense_group_chisq(X, d, groups, K, L):
    """Triple-loop grouped chi-square with pooled probabilities."""
    phat = np.zeros((K, L))
    for k in range(1, K + 1):
        members = [i for i in range(len(d)) if groups[i] == k]
        tot = sum(d[i] for i in members)
        if tot > 0:
            for ell in range(L):
                phat[k - 1, ell] = sum(X[i, ell] for i in members) / tot
    y = 0.0
    for i in range(len(d)):
        for ell in range(L):
            e = d[i] * phat[groups[i] - 1, ell]
            if e > 0:
                y += (X[i, ell] - e) ** 2 / e
            elif X[i, ell] > 0:
                raise AssertionError("zero expected with positive count")
    return y, phat


def dense_dcsbm_sample(B, z, theta, dist, rng):
    """Direct per-pair sampler: the O(n^2) ground truth."""
    n = len(z)
    A = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            lam = theta[i] * theta[j] * B[z[i] - 1, z[j] - 1]
            if dist == "poisson":
                A[i, j] = rng.poisson(lam)
            else:
                A[i, j] = int(rng.random() < min(lam, 1.0))
            A[j, i] = A[i, j]
    return A


def dense_dcsbm_loglik(A, B_hat, theta_hat, pi_hat, z):
    """Pair-loop Poisson log-likelihood with the 0 log 0 = 0 convention."""
    n = len(z)
    ll = 0.0
    for i in range(n):
        ll += np.log(pi_hat[z[i] - 1])
    for i in range(n):
        for j in range(i + 1, n):
            lam = theta_hat[i] * theta_hat[j] * B_hat[z[i] - 1, z[j] - 1]
            if A[i, j] > 0:
                ll += A[i, j] * np.log(lam)
            ll -= lam
    return ll


def dense_adjusted_matrix(A, B_hat, theta_hat, z):
    """Entrywise (A - P) / sqrt(n P) with zero diagonal.

    Pairs whose estimated mean is zero carry no observation (an edge there
    would be inconsistent) and contribute a zero entry.
    """
    n = len(z)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            P = theta_hat[i] * theta_hat[j] * B_hat[z[i] - 1, z[j] - 1]
            if P == 0:
                assert A[i, j] == 0, "edge with zero estimated mean"
                continue
            out[i, j] = (A[i, j] - P) / np.sqrt(n * P)
    return out


def nearest_rank_quantile_ref(values, q):
    """Sorted-list nearest-rank quantile."""
    s = sorted(values)
    import math

    return s[math.ceil(q * len(s)) - 1]
