"""Gaussian-mixture discrepancies (KL and L2) and the 1-D/2-D toy sweeps.

``phi(z | u, s)`` is the normal density with mean ``u`` and *variance*
``s`` (isotropic covariance ``s I`` in more than one dimension). Reading
``s`` as a standard deviation would change every value.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .measures import DiscreteMeasure
from .primal_oracle import solve_distance_threshold, solve_partial_mass


@dataclass(frozen=True)
class ToyConfig:
    sigma: float = 1.0
    omega: float = 0.2

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0 <= self.omega < 1:
            raise ValueError("omega must lie in [0, 1)")


def _as_points(P):
    P = np.asarray(P, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2 or P.shape[0] == 0:
        raise ValueError("point sets must be non-empty")
    return P


def gaussian_density(z, u, var):
    """``phi(z | u, var)`` for every pair of rows of ``z`` and ``u``."""
    z, u = _as_points(z), _as_points(u)
    d = z.shape[1]
    sq = ((z[:, None, :] - u[None, :, :]) ** 2).sum(-1)
    return np.exp(-sq / (2.0 * var)) / (2.0 * np.pi * var) ** (d / 2.0)


def l2_distance(X, Y, sigma=1.0):
    """Gaussian-overlap L2 distance with prefactors 1/q^2, 1/r^2, -2/(qr)."""
    X, Y = _as_points(X), _as_points(Y)
    q, r = len(X), len(Y)
    xx = gaussian_density(X, X, 2 * sigma).sum()
    yy = gaussian_density(Y, Y, 2 * sigma).sum()
    xy = gaussian_density(X, Y, 2 * sigma).sum()
    return float(xx / q ** 2 + yy / r ** 2 - 2.0 * xy / (q * r))


def kl_divergence(X, Y, sigma=1.0, omega=0.2):
    """``-(1/q) sum_j log(omega/q + (1-omega) sum_i phi(y_j|x_i,sigma)/r)``.

    The prefactors follow the printed definition literally (``1/q`` outside
    the log, ``1/r`` inside), even though they look transposed.
    """
    X, Y = _as_points(X), _as_points(Y)
    if not 0 <= omega < 1:
        raise ValueError("omega must lie in [0, 1)")
    q, r = len(X), len(Y)
    mix = gaussian_density(Y, X, sigma).sum(axis=1) / r
    inner = omega / q + (1.0 - omega) * mix
    with np.errstate(divide="ignore"):
        return float(-np.log(inner).sum() / q)


def fig5_sets(t, n_outliers, n_data=10):
    """Data points equi-spaced in [0, 3]; ``Y`` is them shifted by ``t``,
    ``X`` is them plus ``n_outliers`` points equi-spaced in [7.8, 8.2]."""
    data = np.linspace(0.0, 3.0, n_data)
    if n_outliers == 1:
        out = np.array([8.0])
    else:
        out = np.linspace(7.8, 8.2, n_outliers)
    X = np.concatenate([data, out])[:, None]
    Y = (data + t)[:, None]
    return X, Y


FIG5_GRID = np.round(np.linspace(-1.0, 8.0, 181), 10)


def fig5_sweep(n_outliers, grid=None, config=None, m=10.0, h=2.0):
    """Rows ``(t, KL, L2, L_M, L_D)`` over the translation grid."""
    grid = FIG5_GRID if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ValueError("grid must be a non-empty 1-D array of finite values")
    config = config or ToyConfig()
    rows = []
    for t in grid:
        X, Y = fig5_sets(float(t), n_outliers)
        a, b = DiscreteMeasure.uniform(X), DiscreteMeasure.uniform(Y)
        rows.append((float(t),
                     kl_divergence(X, Y, config.sigma, config.omega),
                     l2_distance(X, Y, config.sigma),
                     solve_partial_mass(a, b, m).objective_value,
                     solve_distance_threshold(a, b, h).objective_value))
    return rows


def fig12_sweep(grid=None, config=None, h=2.0):
    """Rows ``(x, y, KL, L2, W1, L_D)`` for ``X = {-2, 2}``, ``Y = {x, y}``.

    The two source points live on the line; ``(x, y)`` spans the plane of
    their positions.
    """
    grid = np.linspace(-4.0, 4.0, 41) if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-D array")
    config = config or ToyConfig(sigma=1.0, omega=0.0)
    X = np.array([[-2.0], [2.0]])
    a = DiscreteMeasure.uniform(X)
    rows = []
    for x in grid:
        for y in grid:
            Y = np.array([[x], [y]])
            b = DiscreteMeasure.uniform(Y)
            rows.append((float(x), float(y),
                         kl_divergence(X, Y, config.sigma, config.omega),
                         l2_distance(X, Y, config.sigma),
                         solve_partial_mass(a, b, 2.0).objective_value,
                         solve_distance_threshold(a, b, h).objective_value))
    return rows


FIG5_HEADER = ("t", "KL", "L2", "L_M", "L_D")
FIG12_HEADER = ("x", "y", "KL", "L2", "W1", "L_D")


def discrepancy_sweep(construction, grid=None, n_outliers=1000, config=None,
                      **kw):
    """Dispatch to a sweep; returns ``(header, rows)``."""
    if construction == "fig5":
        return FIG5_HEADER, fig5_sweep(n_outliers, grid, config, **kw)
    if construction == "fig12":
        return FIG12_HEADER, fig12_sweep(grid, config, **kw)
    raise ValueError(f"unknown construction {construction!r}")


def rows_to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def argmin_column(header, rows, column, key="t"):
    ci, ki = header.index(column), header.index(key)
    best = min(range(len(rows)), key=lambda i: rows[i][ci])
    return rows[best][ki]
