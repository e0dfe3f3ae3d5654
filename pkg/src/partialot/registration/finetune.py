"""Trimmed / thresholded nearest-neighbour refinement.

Minimizes ``F(theta) = sum_j s_j |x_N(j) - T(y_j)| + C(theta)`` where
``x_N(j)`` is the reference point closest to ``T(y_j)`` and the selection
``s_j`` is either the ``m`` smallest residuals (mass kind) or the residuals
not above ``h`` (distance kind). Neighbours and selection are recomputed at
every trial point, so ``F`` is a plain function of ``theta`` and the
step-halving line search never accepts an increase.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


@dataclass(frozen=True)
class FineTuneConfig:
    kind: str = "mass"
    m: float = None
    h: float = None
    max_iter: int = 200
    step: float = 0.1
    rtol: float = 1e-6
    min_step: float = 1e-12

    def __post_init__(self):
        if self.kind == "mass":
            if self.m is None or self.m < 0:
                raise ValueError("mass kind needs m >= 0")
        elif self.kind == "distance":
            if self.h is None or self.h < 0:
                raise ValueError("distance kind needs h >= 0")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.max_iter < 0 or self.step <= 0:
            raise ValueError("invalid iteration settings")


@dataclass
class FineTuneResult:
    transform: object
    objective: list
    iterations: int
    noop: bool = False


class _Objective:
    def __init__(self, X, Y, config, regularizer):
        self.tree = cKDTree(X)
        self.X = X
        self.Y = Y
        self.cfg = config
        self.reg = regularizer

    def selection(self, dist):
        cfg = self.cfg
        if cfg.kind == "distance":
            return dist <= cfg.h
        k = min(int(round(cfg.m)), dist.size)
        s = np.zeros(dist.size, dtype=bool)
        if k > 0:
            s[np.argsort(dist, kind="stable")[:k]] = True
        return s

    def __call__(self, transform, want_grad=False):
        Z = transform.apply(self.Y)
        dist, nn = self.tree.query(Z)
        s = self.selection(dist)
        val = float(dist[s].sum())
        if self.reg is not None:
            val += self.reg.energy(transform)
        if not want_grad:
            return val, s
        G = np.zeros_like(Z)
        sel = s & (dist > 0)
        G[sel] = (Z[sel] - self.X[nn[sel]]) / dist[sel, None]
        grad = transform.vjp(self.Y, G)
        if self.reg is not None:
            grad = grad + self.reg.gradient(transform)
        return val, s, grad


def fine_tune(transform, X, Y, config, regularizer=None):
    """Refine ``transform`` in place; returns a :class:`FineTuneResult`."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    obj = _Objective(X, Y, config, regularizer)
    val, s, grad = obj(transform, want_grad=True)
    if not s.any():
        return FineTuneResult(transform, [val], 0, noop=True)
    history = [val]
    step = config.step
    it = 0
    for it in range(1, config.max_iter + 1):
        n_sel = max(int(s.sum()), 1)
        direction = -grad / n_sel
        accepted = False
        base = transform.params.copy()
        while step >= config.min_step:
            transform.params[...] = base + step * direction
            new_val, new_s = obj(transform)
            if new_val < val:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            transform.params[...] = base
            break
        decrease = val - new_val
        val = new_val
        history.append(val)
        step = min(step * 2.0, config.step * 1e6)
        if decrease < config.rtol * max(abs(history[-2]), 1e-300):
            break
        val, s, grad = obj(transform, want_grad=True)
        if not s.any():
            break
    return FineTuneResult(transform, history, it)
