"""Seeded 2-D test instances shared by the sweeps and the test-suite."""

import numpy as np

from .measures import DiscreteMeasure


def fish_contour(n, rng, noise=0.02):
    """Points on a fish outline: an elliptic body and a triangular tail."""
    s = rng.random(n) * 3.0
    pts = np.empty((n, 2))
    body = s < 2.0
    t = s[body] * np.pi
    pts[body] = np.c_[np.cos(t), 0.5 * np.sin(t)]
    u = s[~body] - 2.0
    upper = u < 0.5
    v = np.where(upper, 2 * u, 2 * (u - 0.5))
    pts[~body] = np.c_[-1.0 - 0.6 * v, np.where(upper, 1.0, -1.0) * 0.5 * v]
    return pts + rng.normal(scale=noise, size=(n, 2))


def fish_pair(seed, n=100, angle=0.5, shift=(1.0, 0.5)):
    """Two independent fish samples, the second rotated and shifted."""
    rng = np.random.default_rng(seed)
    X = fish_contour(n, rng)
    Y = fish_contour(n, rng)
    c, s = np.cos(angle), np.sin(angle)
    Y = Y @ np.array([[c, s], [-s, c]]) + np.asarray(shift)
    return DiscreteMeasure.uniform(X), DiscreteMeasure.uniform(Y)


def clusters_with_stragglers(seed, n_cluster=20, n_straggler=5):
    """Two nearby clusters plus far stragglers on each side.

    With ``m = n_cluster`` the optimal plan moves cluster to cluster and
    leaves every straggler untransported.
    """
    rng = np.random.default_rng(seed)
    A = rng.normal(scale=0.25, size=(n_cluster, 2))
    B = rng.normal(scale=0.25, size=(n_cluster, 2)) + [2.0, 0.0]
    SA = rng.uniform(-0.5, 0.5, size=(n_straggler, 2)) + [-2.5, 2.5]
    SB = rng.uniform(-0.5, 0.5, size=(n_straggler, 2)) + [4.5, -2.5]
    return (DiscreteMeasure.uniform(np.vstack([A, SA])),
            DiscreteMeasure.uniform(np.vstack([B, SB])))
