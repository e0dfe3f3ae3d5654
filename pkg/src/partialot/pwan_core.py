"""Adversarial partial distribution matching with a bounded potential.

The potential ``f`` (a :class:`PotentialNet`) ascends the dual objective

    mass kind:      sum_i a_i f(x_i) - sum_j b_j f(T y_j) + h (m - m_beta) - c GP
    distance kind:  sum_i a_i f(x_i) - sum_j b_j f(T y_j) - c GP

while the transform parameters descend it. The reported divergence estimate
is the penalty-free value, with the constant ``-h m_beta`` added for the
distance kind.
"""

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .measures import DiscreteMeasure, diameter, total_mass
from .optim import make_optimizer
from .potential_net import NetConfig, PotentialNet, sigmoid


@dataclass(frozen=True)
class PwanConfig:
    kind: str = "mass"
    m: float = None
    h: float = None
    u: int = 1
    T: int = 1000
    batch_alpha: int = None     # None means full batch
    batch_beta: int = None
    lr_potential: float = 1e-4
    lr_transform: float = 1e-4
    lr_h: float = None          # learning rate of the bound's pre-parameter
    optimizer_potential: str = "adam"
    optimizer_transform: str = "rmsprop"
    lr_schedule: str = "constant"   # or "cosine", applied to both players
    gp_coefficient: float = 1.0
    gp_points: str = "interpolate"
    gp_aggregate: str = "max"
    h_init: float = None        # mass kind: starting bound, None -> diameter
    net: NetConfig = field(default_factory=NetConfig)
    seed: int = 0
    stop_window: int = None     # phase-switch window, None disables
    stop_rtol: float = 1e-4
    keep_snapshots: bool = False

    def __post_init__(self):
        if self.kind not in ("mass", "distance"):
            raise ValueError(f"kind must be 'mass' or 'distance', got {self.kind!r}")
        if self.kind == "mass":
            if self.m is None or not np.isfinite(self.m) or self.m < 0:
                raise ValueError("mass kind needs a finite m >= 0")
        else:
            if self.h is None or not np.isfinite(self.h) or self.h < 0:
                raise ValueError("distance kind needs a finite h >= 0")
        if self.u < 1:
            raise ValueError("u must be at least 1")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        for b in (self.batch_alpha, self.batch_beta):
            if b is not None and b < 1:
                raise ValueError("batch sizes must be positive")
        if self.gp_points not in ("interpolate", "data"):
            raise ValueError(f"unknown gp_points {self.gp_points!r}")
        if self.gp_aggregate not in ("max", "mean"):
            raise ValueError(f"unknown gp_aggregate {self.gp_aggregate!r}")
        if self.gp_coefficient < 0:
            raise ValueError("gp_coefficient must be nonnegative")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        if self.stop_window is not None and self.stop_window < 1:
            raise ValueError("stop_window must be positive")

    def to_dict(self):
        d = asdict(self)
        d["net"] = {"input_dim": self.net.input_dim,
                    "hidden_widths": list(self.net.hidden_widths),
                    "skip_connections": [list(s) for s in
                                         self.net.skip_connections]}
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "net" in d and isinstance(d["net"], dict):
            n = d["net"]
            d["net"] = NetConfig(
                input_dim=n.get("input_dim", 3),
                hidden_widths=tuple(n.get("hidden_widths", (128, 256, 512, 256, 128))),
                skip_connections=tuple(tuple(s) for s in
                                       n.get("skip_connections", ((1, 4),))))
        return cls(**d)


@dataclass
class PwanTrace:
    """One record per completed outer step."""

    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    stopped_early: bool = False

    def append(self, step, loss, gp, h, estimate, snapshot=None):
        rec = {"step": int(step), "loss": float(loss), "gp": float(gp),
               "h": float(h), "divergence_estimate": float(estimate),
               "snapshot": None}
        if snapshot is not None:
            rec["snapshot"] = len(self.snapshots)
            self.snapshots.append(snapshot)
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([r[name] for r in self.records], dtype=np.float64)

    def to_json_lines(self):
        keys = ("step", "loss", "gp", "h", "divergence_estimate")
        return "".join(json.dumps({k: r[k] for k in keys}) + "\n"
                       for r in self.records)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json_lines())


def _dual_terms(fx, fz, wx, wz):
    return float(wx @ fx) - float(wz @ fz)


def loss_mass(potential, alpha_batch, beta_batch, m, m_alpha=None, m_beta=None,
              gp_coefficient=1.0, gp_aggregate="max", gp_points=None):
    """Mass-kind adversarial loss at the current potential.

    ``beta_batch`` holds the already transformed source points. Batch weights
    are rescaled so that they sum to ``m_alpha`` / ``m_beta`` when those are
    given. The penalty is evaluated on ``gp_points`` (default: both batches).
    """
    fx, fz, wx, wz, gp = _loss_parts(potential, alpha_batch, beta_batch,
                                     m_alpha, m_beta, gp_aggregate, gp_points)
    mb = float(wz.sum())
    return _dual_terms(fx, fz, wx, wz) + potential.h * (m - mb) \
        - gp_coefficient * gp


def loss_distance(potential, alpha_batch, beta_batch, m_alpha=None,
                  m_beta=None, gp_coefficient=1.0, gp_aggregate="max",
                  gp_points=None):
    """Distance-kind surrogate; the estimate is this plus GP minus ``h m_beta``."""
    fx, fz, wx, wz, gp = _loss_parts(potential, alpha_batch, beta_batch,
                                     m_alpha, m_beta, gp_aggregate, gp_points)
    return _dual_terms(fx, fz, wx, wz) - gp_coefficient * gp


def _loss_parts(potential, alpha_batch, beta_batch, m_alpha, m_beta,
                gp_aggregate, gp_points):
    if len(alpha_batch) == 0 or len(beta_batch) == 0:
        raise ValueError("empty batch")
    wx = alpha_batch.weights.copy()
    wz = beta_batch.weights.copy()
    if m_alpha is not None:
        wx *= m_alpha / wx.sum()
    if m_beta is not None:
        wz *= m_beta / wz.sum()
    fx = potential.forward(alpha_batch.points)
    fz = potential.forward(beta_batch.points)
    if gp_points is None:
        gp_points = np.vstack([alpha_batch.points, beta_batch.points])
    gp, _, _ = potential.gradient_penalty(gp_points, gp_aggregate)
    return fx, fz, wx, wz, gp


def theta_gradient(potential, beta_points, transform, beta_weights, idx=None):
    """Gradient of the dual objective w.r.t. the transform parameters.

    Only the ``-sum_j b_j f(T y_j)`` term depends on the transform, so the
    gradient is ``-sum_j b_j J_j^T grad f(T y_j)``.
    """
    Y = np.asarray(beta_points, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[1] != potential.config.input_dim:
        raise ValueError(f"points have dimension {Y.shape[1]}, potential "
                         f"expects {potential.config.input_dim}")
    Z = transform.apply(Y, idx)
    gz = potential.input_gradient(Z)
    w = np.asarray(beta_weights, dtype=np.float64).reshape(-1, 1)
    return transform.vjp(Y, -w * gz, idx)


def mass_annealing(m_alpha_tilde, s, v):
    """Geometric schedule ``m_alpha = m_alpha_tilde * s**v``."""
    if not np.isfinite(s) or s < 1:
        raise ValueError("annealing factor s must be >= 1")
    if m_alpha_tilde < 1:
        raise ValueError("m_alpha_tilde must be >= 1")
    if v < 0:
        raise ValueError("step must be nonnegative")
    return float(m_alpha_tilde * s ** v)


def _check_finite(step, what, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(
                f"non-finite {what} at outer step {step}; aborting")


class _Problem:
    """Data and state shared by the updates of one fit."""

    def __init__(self, alpha, beta, transform, config, potential):
        self.alpha = alpha
        self.beta = beta
        self.transform = transform
        self.cfg = config
        self.net = potential
        self.ma = total_mass(alpha)
        self.mb = total_mass(beta)
        self.pa = alpha.weights / self.ma
        self.pb = beta.weights / self.mb
        self.rng = np.random.default_rng(config.seed)
        self.full_a = config.batch_alpha is None
        self.full_b = config.batch_beta is None

    def batch(self):
        cfg = self.cfg
        if self.full_a:
            ia = None
            X, wx = self.alpha.points, self.alpha.weights
        else:
            ia = self.rng.choice(len(self.alpha), cfg.batch_alpha, p=self.pa)
            X = self.alpha.points[ia]
            wx = np.full(cfg.batch_alpha, self.ma / cfg.batch_alpha)
        if self.full_b:
            ib = np.arange(len(self.beta))
            wy = self.beta.weights
        else:
            ib = self.rng.choice(len(self.beta), cfg.batch_beta, p=self.pb)
            wy = np.full(cfg.batch_beta, self.mb / cfg.batch_beta)
        return X, wx, ib, wy

    def transformed(self, ib):
        Y = self.beta.points[ib]
        if self.transform is None:
            return Y
        return self.transform.apply(Y, ib)

    def evaluate(self, X, wx, Z, wz, want_grad=True):
        """Loss, GP, estimate and (optionally) the ascent gradient."""
        cfg, net = self.cfg, self.net
        nx, nz = len(X), len(Z)
        parts = [X, Z]
        if cfg.gp_points == "interpolate":
            n = max(nx, nz)
            i = self.rng.integers(nx, size=n)
            j = self.rng.integers(nz, size=n)
            e = self.rng.random((n, 1))
            parts.append(e * X[i] + (1 - e) * Z[j])
        S = np.vstack(parts)
        cache = net._forward(S)
        fx, fz = cache.value[:nx], cache.value[nx:nx + nz]
        h = net.h
        mb = float(wz.sum())
        dual = float(wx @ fx) - float(wz @ fz)
        if cfg.kind == "mass":
            dual += h * (cfg.m - mb)
            estimate = dual
        else:
            estimate = dual - h * mb
        gp, gp_grad, _ = net._penalty_from_cache(cache, cfg.gp_aggregate)
        loss = dual - cfg.gp_coefficient * gp
        if not want_grad:
            return loss, gp, estimate, None
        coeff = np.zeros(S.shape[0])
        coeff[:nx] = wx
        coeff[nx:nx + nz] = -wz
        grad = net._param_gradient_from_cache(cache, coeff)
        if cfg.kind == "mass" and net.learnable_h:
            grad[-1] += (cfg.m - mb) * sigmoid(net.params[-1])
        grad -= cfg.gp_coefficient * gp_grad
        return loss, gp, estimate, grad


def make_potential(config, alpha, beta):
    if config.kind == "mass":
        h0 = config.h_init
        if h0 is None:
            h0 = diameter(alpha, beta)
        return PotentialNet(config.net, h=h0, learnable_h=True,
                            seed=config.seed)
    return PotentialNet(config.net, h=config.h, learnable_h=False,
                        seed=config.seed)


def _window_stalled(losses, w, rtol):
    if len(losses) < 2 * w:
        return False
    prev = float(np.mean(losses[-2 * w:-w]))
    cur = float(np.mean(losses[-w:]))
    return prev - cur < rtol * max(abs(prev), 1e-12)


def pwan_fit(alpha, beta, transform, regularizer, config, potential=None,
             callback=None):
    """Alternate potential ascent and transform descent for ``config.T`` steps.

    ``transform`` may be ``None`` to keep the source frozen (pure divergence
    estimation). ``regularizer`` is ``None`` or an object with
    ``gradient(transform)`` returning a vector shaped like
    ``transform.params``. Returns ``(transform, trace, potential)``; the
    transform is updated in place.
    """
    if alpha.dim != beta.dim:
        raise ValueError(f"dimension mismatch: {alpha.dim} vs {beta.dim}")
    if config.net.input_dim != alpha.dim:
        config = replace(config, net=replace(config.net, input_dim=alpha.dim))
    if config.kind == "mass" and config.m > min(total_mass(alpha),
                                                total_mass(beta)) * (1 + 1e-12):
        raise ValueError("m exceeds min(m_alpha, m_beta)")
    if potential is None:
        potential = make_potential(config, alpha, beta)
    prob = _Problem(alpha, beta, transform, config, potential)
    opt_f = make_optimizer(config.optimizer_potential, config.lr_potential)
    opt_t = make_optimizer(config.optimizer_transform, config.lr_transform)
    trace = PwanTrace()
    losses = []

    base_lr = config.lr_potential
    if potential.learnable_h and config.lr_h is not None:
        base_lr = np.full(potential.n_params, config.lr_potential)
        base_lr[-1] = config.lr_h
    opt_f.lr = base_lr

    for step in range(config.T):
        if config.lr_schedule == "cosine":
            decay = 0.5 * (1.0 + np.cos(np.pi * step / config.T))
            opt_f.lr = base_lr * decay
            opt_t.lr = config.lr_transform * decay
        for _ in range(config.u):
            X, wx, ib, wz = prob.batch()
            Z = prob.transformed(ib)
            loss, gp, est, grad = prob.evaluate(X, wx, Z, wz)
            _check_finite(step, "loss or potential gradient", loss, grad)
            opt_f.step(potential.params, -grad)   # ascent
            _check_finite(step, "potential parameters", potential.params)
        if transform is not None:
            Y = beta.points[ib]
            gt = theta_gradient(potential, Y, transform, wz, ib)
            if regularizer is not None:
                gt = gt + regularizer.gradient(transform)
            _check_finite(step, "transform gradient", gt)
            opt_t.step(transform.params, gt)       # descent
            _check_finite(step, "transform parameters", transform.params)
        snap = transform.params.copy() if (
            config.keep_snapshots and transform is not None) else None
        trace.append(step, loss, gp, potential.h, est, snap)
        losses.append(loss)
        if callback is not None:
            callback(step, potential, transform)
        if config.stop_window and _window_stalled(losses, config.stop_window,
                                                  config.stop_rtol):
            trace.stopped_early = True
            break
    return transform, trace, potential


def dual_value(potential, alpha, beta_points, kind, m=None, beta_weights=None):
    """Penalty-free divergence estimate of a fixed potential on full data."""
    fx = potential.forward(alpha.points)
    fz = potential.forward(beta_points)
    wz = np.ones(len(fz)) if beta_weights is None else beta_weights
    mb = float(np.sum(wz))
    val = float(alpha.weights @ fx) - float(wz @ fz)
    if kind == "mass":
        return val + potential.h * (m - mb)
    return val - potential.h * mb


# Settings used for potential-only estimation. The penalty coefficient is
# scaled with the total mass because the dual terms grow with it while the
# per-point penalty does not.
ESTIMATE_DEFAULTS = dict(u=1, lr_potential=3e-3, lr_h=3e-2,
                         lr_schedule="cosine", optimizer_potential="adam",
                         gp_aggregate="mean", gp_points="interpolate")
GP_PER_UNIT_MASS = 4.0


def estimate_divergence(alpha, beta, kind, threshold, net_config=None,
                        steps=5000, seed=0, **overrides):
    """Maximize the dual over the potential only and return the estimate.

    ``threshold`` is ``m`` for the mass kind and ``h`` for the distance
    kind. Extra keyword arguments override :class:`PwanConfig` fields; by
    default the penalty coefficient is ``4 * max(m_alpha, m_beta)``.
    Returns ``(estimate, trace, potential)``.
    """
    net_config = net_config or NetConfig(input_dim=alpha.dim,
                                         hidden_widths=(128, 128, 128),
                                         skip_connections=())
    kw = dict(ESTIMATE_DEFAULTS, kind=kind, T=steps, seed=seed,
              net=net_config)
    kw["gp_coefficient"] = GP_PER_UNIT_MASS * max(total_mass(alpha),
                                                  total_mass(beta))
    kw["m" if kind == "mass" else "h"] = threshold
    kw.update(overrides)
    cfg = PwanConfig(**kw)
    _, trace, net = pwan_fit(alpha, beta, None, None, cfg)
    est = dual_value(net, alpha, beta.points, kind, cfg.m, beta.weights)
    return est, trace, net
