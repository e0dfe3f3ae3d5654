"""Discrete unnormalized measures on Euclidean space."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted point cloud ``sum_i w_i delta_{x_i}``.

    Weights are kept unnormalized; the total mass is whatever they sum to.
    Arrays are copied and frozen at construction. ``allow_zero_mass`` exists
    for residual measures (untransported mass), which may legitimately be 0.
    """

    points: np.ndarray
    weights: np.ndarray
    allow_zero_mass: bool = field(default=False, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a non-empty (n, D) array")
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise ValueError(
                f"got {pts.shape[0]} points but {w.shape[0]} weights")
        if not np.all(np.isfinite(pts)):
            raise ValueError("coordinates must be finite")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if w.sum() <= 0 and not self.allow_zero_mass:
            raise ValueError("total mass must be positive")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points, mass_per_point=1.0):
        points = np.asarray(points, dtype=np.float64)
        n = points.shape[0]
        return cls(points, np.full(n, float(mass_per_point)))

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    @property
    def mass(self):
        return total_mass(self)

    def normalized(self):
        return DiscreteMeasure(self.points, self.weights / self.weights.sum())

    def __repr__(self):
        return (f"DiscreteMeasure(n={len(self)}, dim={self.dim}, "
                f"mass={self.mass:.6g})")


def total_mass(mu):
    return float(np.sum(mu.weights))


def pairwise_distances(x, y):
    """Euclidean distance matrix between the rows of ``x`` and ``y``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[1] != y.shape[1]:
        raise ValueError(
            f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    diff = x[:, None, :] - y[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def cost_matrix(alpha, beta):
    """Ground cost ``d(x_i, y_j)`` between the supports of two measures."""
    return pairwise_distances(alpha.points, beta.points)


def empirical_batch(mu, n, rng):
    """Draw ``n`` i.i.d. points from ``mu / m_mu``; each carries ``m_mu / n``.

    ``rng`` is a ``numpy.random.Generator`` or a seed.
    """
    if n < 1:
        raise ValueError("batch size must be at least 1")
    rng = np.random.default_rng(rng)
    p = mu.weights / mu.weights.sum()
    idx = rng.choice(len(mu), size=n, replace=True, p=p)
    return DiscreteMeasure(mu.points[idx], np.full(n, total_mass(mu) / n))


def diameter(*measures):
    """Diameter of the union of supports.

    Exact up to 4000 points; above that the bounding-box diagonal (an upper
    bound) is returned.
    """
    pts = np.concatenate([np.asarray(m.points if isinstance(m, DiscreteMeasure)
                                     else m, dtype=np.float64)
                          for m in measures])
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) > 4000:
        # bounding-box diagonal bounds the diameter from above
        return float(np.linalg.norm(pts.max(0) - pts.min(0)))
    return float(pairwise_distances(pts, pts).max())


def load_points(path, dim=None):
    """Read a point-set text file.

    One point per line, whitespace separated, ``dim`` coordinate columns and
    an optional trailing weight column (default weight 1). Lines starting
    with ``#`` are comments, except that a ``# dim=D`` line pins the
    dimension. Without either hint every column is a coordinate.
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                tag = s[1:].strip()
                if tag.startswith("dim="):
                    dim = int(tag[4:])
                continue
            rows.append([float(v) for v in s.split()])
    if not rows:
        raise ValueError(f"{path}: no points")
    arr = np.array(rows, dtype=np.float64)
    if dim is None:
        dim = arr.shape[1]
    if arr.shape[1] == dim:
        return DiscreteMeasure(arr, np.ones(len(arr)))
    if arr.shape[1] == dim + 1:
        return DiscreteMeasure(arr[:, :dim], arr[:, dim])
    raise ValueError(f"{path}: expected {dim} or {dim + 1} columns")


def save_points(path, mu, header=None):
    """Write ``mu`` in the text format read by :func:`load_points`."""
    if not isinstance(mu, DiscreteMeasure):
        mu = DiscreteMeasure.uniform(mu)
    with_weights = not np.all(mu.weights == 1.0)
    with open(path, "w") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.write(f"# dim={mu.dim}\n")
        for p, w in zip(mu.points, mu.weights):
            cols = [repr(float(v)) for v in p]
            if with_weights:
                cols.append(repr(float(w)))
            fh.write(" ".join(cols) + "\n")
