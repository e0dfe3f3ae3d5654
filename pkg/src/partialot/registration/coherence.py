"""Motion-coherence regularizer ``lam * Tr(V^T (sigma I + G)^{-1} V)``.

``G`` is the Gaussian kernel matrix of the source points. The dense form is
kept for reporting and tests; optimization uses a Nystrom factorization
``G ~ Q diag(lam_k) Q^T`` and the Woodbury identity, which costs O(r k^2).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

EIG_CUTOFF = 1e-10


@dataclass(frozen=True)
class CoherenceConfig:
    lam: float = 0.01
    rho: float = 2.0
    sigma: float = 0.1
    k: int = 100

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.rho <= 0 or self.sigma <= 0:
            raise ValueError("rho and sigma must be positive")
        if self.k < 1:
            raise ValueError("k must be at least 1")


def _sq_dists(A, B):
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def gaussian_kernel(Y, rho):
    """``G[i, j] = exp(-|y_i - y_j|^2 / rho)``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    Y = np.asarray(Y, dtype=np.float64)
    G = np.exp(-_sq_dists(Y, Y) / rho)
    np.fill_diagonal(G, 1.0)
    return G


def nystrom_decompose(Y, rho, k, seed=0, max_retries=3):
    """Rank-``k`` Nystrom factors ``(Q, lam)`` with ``G ~ Q diag(lam) Q^T``.

    Landmarks are drawn uniformly without replacement. Eigenvalues of the
    landmark block below ``EIG_CUTOFF * lam_max`` are dropped; when that
    leaves fewer than ``k`` components the landmarks are redrawn up to
    ``max_retries`` times, after which the truncated (pseudo-inverse)
    factorization is returned.
    """
    Y = np.asarray(Y, dtype=np.float64)
    r = Y.shape[0]
    if not 1 <= k <= r:
        raise ValueError(f"k must lie in [1, {r}], got {k}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max_retries + 1):
        idx = np.sort(rng.choice(r, size=k, replace=False)) if k < r \
            else np.arange(r)
        C = np.exp(-_sq_dists(Y, Y[idx]) / rho)
        C[idx, np.arange(k)] = 1.0
        W = C[idx]
        evals, evecs = eigh((W + W.T) / 2.0)
        keep = evals > EIG_CUTOFF * evals.max()
        evals, evecs = evals[keep], evecs[:, keep]
        # C U diag(1/lam) has orthonormal columns when k = r
        Q = C @ evecs / evals
        if best is None or evals.size > best[1].size:
            best = (Q, evals)
        if evals.size == k or k == r:
            break
    return best


def coherence_energy(V, Y, config):
    """Dense reference value of the regularizer."""
    V = np.asarray(V, dtype=np.float64)
    G = gaussian_kernel(Y, config.rho)
    M = config.sigma * np.eye(G.shape[0]) + G
    return float(config.lam * np.sum(V * np.linalg.solve(M, V)))


def dense_coherence_gradient(V, Y, config):
    G = gaussian_kernel(Y, config.rho)
    M = config.sigma * np.eye(G.shape[0]) + G
    return 2.0 * config.lam * np.linalg.solve(M, V)


def coherence_gradient(V, Q, lam_k, sigma, lam):
    """Woodbury form of ``2 lam (sigma I + Q diag(lam_k) Q^T)^{-1} V``."""
    V = np.asarray(V, dtype=np.float64)
    if not np.any(V):
        return np.zeros_like(V)
    lam_k = np.asarray(lam_k, dtype=np.float64)
    if lam_k.size == 0 or np.any(lam_k <= 0):
        raise np.linalg.LinAlgError(
            "Nystrom eigenvalues must be positive; components below "
            f"{EIG_CUTOFF:g} * lambda_max should have been dropped")
    inner = np.diag(1.0 / lam_k) + (Q.T @ Q) / sigma
    try:
        S = np.linalg.solve(inner, Q.T @ V)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"singular inner system with eigenvalue cutoff {EIG_CUTOFF:g}"
        ) from exc
    return 2.0 * lam / sigma * (V - Q @ S / sigma)


class CoherenceRegularizer:
    """Gradient provider for :func:`pwan_fit` on a non-rigid transform."""

    def __init__(self, Y, config, seed=0):
        self.config = config
        k = min(config.k, len(Y))
        self.Q, self.lam_k = nystrom_decompose(Y, config.rho, k, seed)

    def gradient_V(self, V):
        c = self.config
        return coherence_gradient(V, self.Q, self.lam_k, c.sigma, c.lam)

    def gradient(self, transform):
        out = np.zeros_like(transform.params)
        d = transform.dim
        out[d * d + d:] = self.gradient_V(transform.V).ravel()
        return out

    def energy(self, transform):
        # V^T (sigma I + G)^{-1} V through the same factorization
        V = transform.V
        if self.config.lam == 0:
            return 0.0
        return 0.5 * float(np.sum(V * self.gradient_V(V)))
