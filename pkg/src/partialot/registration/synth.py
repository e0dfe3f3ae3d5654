"""Synthetic registration cases with known correspondence."""

from dataclasses import dataclass, field

import numpy as np

from ..measures import load_points
from .transforms import axis_angle_matrix


def sphere_section(n, rng):
    """Points on an asymmetric patch of the unit sphere.

    Azimuth covers three quarters of the circle and the polar angle stops
    short of the south pole, so no proper rotation maps the patch to itself.
    """
    phi = rng.uniform(0.0, 1.5 * np.pi, n)
    # uniform in area over the polar band [0, 0.75 pi]
    cos_t = rng.uniform(np.cos(0.75 * np.pi), 1.0, n)
    sin_t = np.sqrt(1.0 - cos_t ** 2)
    return np.c_[sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t]


def helix(n, rng, turns=2.0, radius=1.0, pitch=0.5, noise=0.02):
    s = rng.uniform(0.0, 2 * np.pi * turns, n)
    pts = np.c_[radius * np.cos(s), radius * np.sin(s), pitch * s / (2 * np.pi)]
    return pts + rng.normal(scale=noise, size=pts.shape)


def blob(n, rng):
    """Closed bumpy surface: a star-shaped radius modulation of the sphere.

    The bump pattern is fixed (only the sampling is random) and has no
    rotational symmetry, which partial matching needs to be well posed.
    """
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    th = np.arccos(np.clip(v[:, 2], -1.0, 1.0))
    ph = np.arctan2(v[:, 1], v[:, 0])
    r = (1.0 + 0.25 * np.sin(3 * th) * np.cos(2 * ph + 0.4)
         + 0.2 * np.cos(2 * th + 1.0) * np.sin(ph)
         + 0.15 * np.cos(th) ** 3)
    return v * r[:, None]


SHAPES = {"sphere": sphere_section, "helix": helix, "blob": blob}


@dataclass(frozen=True)
class RigidDeform:
    angle_deg: float = 30.0
    axis: tuple = (0.0, 0.0, 1.0)
    translation: tuple = (0.0, 0.0, 0.0)

    def rotation(self):
        return axis_angle_matrix(self.axis, np.radians(self.angle_deg))

    def __call__(self, P, rng):
        return P @ self.rotation().T + np.asarray(self.translation)


@dataclass(frozen=True)
class SmoothDeform:
    """Gaussian-RBF displacement field with random centers."""

    n_centers: int = 5
    magnitude: float = 0.1
    bandwidth_frac: float = 0.3

    def __call__(self, P, rng):
        idx = rng.choice(len(P), size=min(self.n_centers, len(P)), replace=False)
        centers = P[idx]
        diam = np.linalg.norm(P.max(0) - P.min(0))
        bw = self.bandwidth_frac * diam
        coef = rng.normal(size=(len(idx), P.shape[1]))
        d2 = ((P[:, None, :] - centers[None]) ** 2).sum(-1)
        disp = np.exp(-d2 / (2 * bw * bw)) @ coef
        mean_norm = np.linalg.norm(disp, axis=1).mean()
        if mean_norm > 0:
            disp *= self.magnitude / mean_norm
        return P + disp


@dataclass
class Case:
    """Source/reference pair; ``gt[j]`` is the reference index matching
    source point ``j`` or -1 when its counterpart was removed."""

    source: np.ndarray
    reference: np.ndarray
    gt: np.ndarray
    info: dict = field(default_factory=dict)

    def overlap(self):
        return self.gt >= 0


def normalize(P):
    """Shift to mean 0 and scale to unit total variance."""
    mu = P.mean(0)
    c = P - mu
    s = np.sqrt((c ** 2).sum(1).mean())
    if s == 0:
        raise ValueError("degenerate point set")
    return c / s, mu, s


def plane_crop(P, retain, rng):
    """Keep the fraction ``retain`` of points on one side of a random plane."""
    if not 0 < retain <= 1:
        raise ValueError("retain ratio must be in (0, 1]")
    normal = rng.normal(size=P.shape[1])
    normal /= np.linalg.norm(normal)
    proj = (P - P.mean(0)) @ normal
    k = int(round(retain * len(P)))
    if k < 1:
        raise ValueError("crop removes every point")
    return np.sort(np.argsort(proj, kind="stable")[:k])


def synthesize_case(shape="sphere", n=500, deform=None, outliers=0,
                    crop_retain=None, seed=0, normalization="separate"):
    """Build a registration case.

    The reference is the deformed base shape; the source is the base shape
    itself, so correspondence is known point by point. ``outliers`` uniform
    points are added to the reference inside its (slightly enlarged)
    bounding box; ``crop_retain`` crops both sets with independent random
    planes. With ``normalization="separate"`` each set is then shifted and
    scaled to mean 0 and unit variance; ``"joint"`` applies the source's
    shift and scale to both sets, which keeps a rigid ground truth rigid
    (its normalized rotation and translation are stored in ``info``);
    ``None`` leaves coordinates untouched.
    """
    if normalization not in ("separate", "joint", None):
        raise ValueError(f"unknown normalization {normalization!r}")
    rng = np.random.default_rng(seed)
    if isinstance(shape, str) and shape in SHAPES:
        base = SHAPES[shape](n, rng)
    else:
        base = load_points(shape).points
        if len(base) > n:
            base = base[np.sort(rng.choice(len(base), n, replace=False))]
    n = len(base)
    ref = deform(base, rng) if deform is not None else base.copy()

    src_idx = np.arange(n)
    ref_idx = np.arange(n)
    if crop_retain is not None:
        src_idx = plane_crop(base, crop_retain, rng)
        ref_idx = plane_crop(ref, crop_retain, rng)
    source = base[src_idx]
    reference = ref[ref_idx]
    pos = np.full(n, -1)
    pos[ref_idx] = np.arange(len(ref_idx))
    gt = pos[src_idx]

    n_out = int(outliers)
    if n_out < 0:
        raise ValueError("outlier count must be nonnegative")
    if n_out:
        lo, hi = reference.min(0), reference.max(0)
        pad = 0.1 * (hi - lo)
        noise = rng.uniform(lo - pad, hi + pad, size=(n_out, reference.shape[1]))
        reference = np.vstack([reference, noise])

    info = {"shape": shape if isinstance(shape, str) else str(shape),
            "n": n, "outliers": n_out, "crop_retain": crop_retain,
            "seed": seed}
    if normalization == "separate":
        source, mu_s, s_s = normalize(source)
        reference, mu_r, s_r = normalize(reference)
    elif normalization == "joint":
        source, mu_s, s_s = normalize(source)
        mu_r, s_r = mu_s, s_s
        reference = (reference - mu_r) / s_r
    else:
        mu_s = mu_r = np.zeros(source.shape[1])
        s_s = s_r = 1.0
    info.update(source_center=np.asarray(mu_s).tolist(),
                source_scale=float(s_s),
                reference_center=np.asarray(mu_r).tolist(),
                reference_scale=float(s_r))
    if isinstance(deform, RigidDeform) and normalization != "separate":
        # ref_n = R src_n + t_n in normalized coordinates
        R = deform.rotation()
        t_n = (R @ mu_s + np.asarray(deform.translation) - mu_r) / s_r
        info.update(rotation=R.tolist(), translation=t_n.tolist())
    return Case(source, reference, gt, info)


def mse(aligned, target, correspondence=None):
    """Mean squared distance over corresponding pairs.

    ``correspondence[j]`` is the target index for ``aligned[j]``; entries
    below 0 are skipped. Without a correspondence rows are paired by index.
    """
    aligned = np.asarray(aligned, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if correspondence is None:
        if aligned.shape != target.shape:
            raise ValueError("shapes differ and no correspondence given")
        diff = aligned - target
    else:
        c = np.asarray(correspondence)
        if c.shape[0] != aligned.shape[0]:
            raise ValueError("correspondence must cover every aligned point")
        ok = c >= 0
        if not ok.any():
            raise ValueError("no corresponding pairs")
        diff = aligned[ok] - target[c[ok]]
    return float((diff ** 2).sum(1).mean())


def voxel_downsample(P, size=0.08):
    """Centroid of the points in each occupied grid cell (unit weights)."""
    P = np.asarray(P, dtype=np.float64)
    if size <= 0:
        raise ValueError("voxel size must be positive")
    keys = np.floor((P - P.min(0)) / size).astype(np.int64)
    _, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    counts = np.bincount(inv)
    out = np.zeros((counts.size, P.shape[1]))
    np.add.at(out, inv, P)
    return out / counts[:, None]
