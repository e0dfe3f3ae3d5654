"""Bounded potential network ``f(x) = clip(-|g(x)|, -h, 0)``.

``g`` is a point-wise ReLU MLP with optional additive skip connections.
Everything is plain numpy with hand-written reverse mode, including the
second-order pass needed to differentiate the gradient penalty with respect
to the weights.

Layer numbering: hidden layers are ``1..L`` and ``L + 1`` is the scalar
output layer. A skip ``(i, j)`` adds ``a_i @ P_ij`` to the input of layer
``j``, where ``a_i`` is the post-ReLU output of hidden layer ``i`` and
``P_ij`` is a learned width-matching matrix.

Derivative conventions at kinks: ``|.|'(0) = 0``, ``relu'(0) = 0``, and at
``|g| = h`` the clip takes the derivative from the interior.
"""

import json
from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_VERSION = 1


def softplus(x):
    return np.logaddexp(0.0, x)


def inv_softplus(y):
    # log(expm1(y)) without overflow for large y
    return float(y + np.log(-np.expm1(-y)))


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class NetConfig:
    input_dim: int = 3
    hidden_widths: tuple = (128, 256, 512, 256, 128)
    skip_connections: tuple = ((1, 4),)

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths",
                           tuple(int(w) for w in self.hidden_widths))
        object.__setattr__(self, "skip_connections",
                           tuple(sorted((int(i), int(j))
                                        for i, j in self.skip_connections)))
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if len(self.hidden_widths) < 1 or min(self.hidden_widths) < 1:
            raise ValueError("need at least one hidden layer of width >= 1")
        n = len(self.hidden_widths)
        for i, j in self.skip_connections:
            if not (1 <= i and i + 1 < j <= n + 1):
                raise ValueError(
                    f"skip ({i}, {j}) must connect hidden layer i to a later "
                    f"layer j in [i + 2, {n + 1}]")

    def in_width(self, layer):
        """Width of the input of ``layer`` (1-based, ``L + 1`` = output)."""
        if layer == 1:
            return self.input_dim
        return self.hidden_widths[layer - 2]


@dataclass
class _Cache:
    u: list          # u[l] is the input of layer l (index 0 unused)
    z: list          # pre-activations of hidden layers
    a: list          # post-ReLU outputs
    raw: np.ndarray
    value: np.ndarray
    slope: np.ndarray    # d value / d raw
    clipped: np.ndarray  # |raw| > h (value pinned at -h)


@dataclass
class _Layout:
    shapes: dict = field(default_factory=dict)
    offsets: dict = field(default_factory=dict)
    size: int = 0

    def add(self, name, shape):
        self.shapes[name] = shape
        self.offsets[name] = self.size
        self.size += int(np.prod(shape))


class PotentialNet:
    """Parameters plus forward/backward passes of the potential network.

    All parameters live in the flat vector ``params`` so optimizers can work
    on one array; ``W``, ``b``, ``P``, ``w_out``, ``b_out`` are views into it.
    When ``learnable_h`` is set the bound is ``h = softplus(eta)`` and
    ``eta`` is the last entry of ``params``.
    """

    def __init__(self, config, h=1.0, learnable_h=False, seed=0):
        self.config = config
        self.learnable_h = bool(learnable_h)
        if h < 0 or not np.isfinite(h):
            raise ValueError("h must be finite and nonnegative")
        if self.learnable_h and h <= 0:
            raise ValueError("learnable h needs a positive initial value")

        L = len(config.hidden_widths)
        lay = _Layout()
        for l in range(1, L + 1):
            lay.add(("W", l), (config.in_width(l), config.hidden_widths[l - 1]))
            lay.add(("b", l), (config.hidden_widths[l - 1],))
        for i, j in config.skip_connections:
            lay.add(("P", i, j), (config.hidden_widths[i - 1], config.in_width(j)))
        lay.add(("w_out",), (config.hidden_widths[-1],))
        lay.add(("b_out",), (1,))
        if self.learnable_h:
            lay.add(("eta",), (1,))
        self._layout = lay
        self.params = np.zeros(lay.size)
        self._bind_views()

        rng = np.random.default_rng(seed)
        for l in range(1, L + 1):
            s = 1.0 / np.sqrt(config.in_width(l))
            self.W[l][...] = rng.uniform(-s, s, self.W[l].shape)
            self.b[l][...] = rng.uniform(-s, s, self.b[l].shape)
        for key, P in self.P.items():
            s = 1.0 / np.sqrt(P.shape[0])
            P[...] = rng.uniform(-s, s, P.shape)
        s = 1.0 / np.sqrt(config.hidden_widths[-1])
        self.w_out[...] = rng.uniform(-s, s, self.w_out.shape)
        self.b_out[...] = rng.uniform(-s, s, 1)
        if self.learnable_h:
            self._eta[...] = inv_softplus(h)
            self._h_fixed = None
        else:
            self._h_fixed = float(h)

    def _bind_views(self):
        lay = self._layout
        cfg = self.config

        def view(name):
            o = lay.offsets[name]
            shape = lay.shapes[name]
            return self.params[o:o + int(np.prod(shape))].reshape(shape)

        L = len(cfg.hidden_widths)
        self.W = {l: view(("W", l)) for l in range(1, L + 1)}
        self.b = {l: view(("b", l)) for l in range(1, L + 1)}
        self.P = {(i, j): view(("P", i, j)) for i, j in cfg.skip_connections}
        self.w_out = view(("w_out",))
        self.b_out = view(("b_out",))
        self._eta = view(("eta",)) if self.learnable_h else None

    def _offset(self, name):
        o = self._layout.offsets[name]
        return slice(o, o + int(np.prod(self._layout.shapes[name])))

    @property
    def n_params(self):
        return self._layout.size

    @property
    def h(self):
        if self.learnable_h:
            return float(softplus(self._eta[0]))
        return self._h_fixed

    @h.setter
    def h(self, value):
        if value < 0:
            raise ValueError("h must be nonnegative")
        if self.learnable_h:
            self._eta[...] = inv_softplus(value)
        else:
            self._h_fixed = float(value)

    def set_params(self, flat):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != self.params.shape:
            raise ValueError("parameter vector has the wrong size")
        self.params[...] = flat

    def copy(self):
        other = PotentialNet.__new__(PotentialNet)
        other.config = self.config
        other.learnable_h = self.learnable_h
        other._layout = self._layout
        other.params = self.params.copy()
        other._h_fixed = self._h_fixed
        other._bind_views()
        return other

    # ------------------------------------------------------------------
    # passes

    def _check_input(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None] if self.config.input_dim == 1 else X[None, :]
        if X.ndim != 2 or X.shape[1] != self.config.input_dim:
            raise ValueError(
                f"expected inputs of dimension {self.config.input_dim}, "
                f"got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite input")
        return X

    def _forward(self, X):
        cfg = self.config
        L = len(cfg.hidden_widths)
        skips_into = {}
        for i, j in cfg.skip_connections:
            skips_into.setdefault(j, []).append(i)
        u = [None] * (L + 2)
        z = [None] * (L + 1)
        a = [None] * (L + 1)
        u[1] = X
        for l in range(1, L + 1):
            z[l] = u[l] @ self.W[l] + self.b[l]
            a[l] = np.maximum(z[l], 0.0)
            nxt = a[l]
            for i in skips_into.get(l + 1, ()):
                nxt = nxt + a[i] @ self.P[(i, l + 1)]
            u[l + 1] = nxt
        raw = u[L + 1] @ self.w_out + self.b_out[0]
        h = self.h
        absr = np.abs(raw)
        clipped = absr > h
        value = np.where(clipped, -h, -absr)
        slope = np.where(clipped, 0.0, -np.sign(raw))
        return _Cache(u, z, a, raw, value, slope, clipped)

    def raw(self, X):
        """Unclipped MLP output ``g(x)``."""
        return self._forward(self._check_input(X)).raw

    def forward(self, X):
        """Potential values, one per row of ``X``; always in ``[-h, 0]``."""
        return self._forward(self._check_input(X)).value

    __call__ = forward

    def _backward(self, cache, delta, want_params=True, want_input=True):
        """Reverse pass for ``sum_n delta_n * raw_n``.

        Returns (flat parameter gradient or None, input gradient or None,
        per-layer gradients ``(gu, ga)`` w.r.t. layer inputs and outputs).
        """
        cfg = self.config
        L = len(cfg.hidden_widths)
        grad = np.zeros(self._layout.size) if want_params else None
        gu = [None] * (L + 2)
        ga = [None] * (L + 1)
        gu[L + 1] = delta[:, None] * self.w_out[None, :]
        if want_params:
            grad[self._offset(("w_out",))] = cache.u[L + 1].T @ delta
            grad[self._offset(("b_out",))] = delta.sum()

        def push(j):
            # distribute gu[j] to the hidden outputs that feed layer j
            if j - 1 >= 1:
                ga[j - 1] = gu[j] if ga[j - 1] is None else ga[j - 1] + gu[j]
            for i in range(1, j - 1):
                key = (i, j)
                if key in self.P:
                    contrib = gu[j] @ self.P[key].T
                    ga[i] = contrib if ga[i] is None else ga[i] + contrib
                    if want_params:
                        grad[self._offset(("P", i, j))] = \
                            (cache.a[i].T @ gu[j]).ravel()

        push(L + 1)
        for l in range(L, 0, -1):
            gz = ga[l] * (cache.z[l] > 0)
            if want_params:
                grad[self._offset(("W", l))] = (cache.u[l].T @ gz).ravel()
                grad[self._offset(("b", l))] = gz.sum(axis=0)
            if l > 1 or want_input:
                gu[l] = gz @ self.W[l].T
            if l > 1:
                push(l)
        return grad, (gu[1] if want_input else None), (gu, ga)

    def input_gradient(self, X):
        """Gradient of the potential with respect to each input row."""
        cache = self._forward(self._check_input(X))
        _, gx, _ = self._backward(cache, cache.slope, want_params=False)
        return gx

    def param_gradient(self, X, coeff):
        """Gradient of ``sum_n coeff_n f(x_n)`` with respect to ``params``.

        Includes ``d/d eta`` through ``h = softplus(eta)`` when ``h`` is
        learnable (only clipped points depend on ``h``).
        """
        X = self._check_input(X)
        coeff = np.asarray(coeff, dtype=np.float64).reshape(-1)
        if X.shape[0] == 0:
            raise ValueError("empty batch")
        if coeff.shape[0] != X.shape[0]:
            raise ValueError("batch and coefficients are misaligned")
        cache = self._forward(X)
        return self._param_gradient_from_cache(cache, coeff)

    def _param_gradient_from_cache(self, cache, coeff):
        grad, _, _ = self._backward(cache, coeff * cache.slope,
                                    want_input=False)
        if self.learnable_h:
            dh = -float(coeff[cache.clipped].sum())
            grad[self._offset(("eta",))] = dh * sigmoid(self._eta[0])
        return grad

    def gradient_penalty(self, points, aggregate="max"):
        """Penalty ``agg_n max(|grad f(x_n)|^2, 1)`` and its parameter gradient.

        ``aggregate`` is ``"max"`` (maximum over the points) or ``"mean"``.
        The gradient is obtained by differentiating the input-gradient pass
        a second time (double backprop); inside a linear region of the ReLU
        net only weight matrices enter the input gradient, so biases get zero.
        """
        X = self._check_input(points)
        if X.shape[0] == 0:
            raise ValueError("empty evaluation set")
        cache = self._forward(X)
        return self._penalty_from_cache(cache, aggregate)

    def _penalty_from_cache(self, cache, aggregate="max"):
        _, gx, inner = self._backward(cache, cache.slope, want_params=False)
        sq = np.einsum("ij,ij->i", gx, gx)
        per_point = np.maximum(sq, 1.0)
        n = sq.shape[0]
        if aggregate == "max":
            k = int(np.argmax(per_point))
            value = float(per_point[k])
            weights = np.zeros(n)
            if sq[k] > 1.0:
                weights[k] = 1.0
        elif aggregate == "mean":
            value = float(per_point.mean())
            weights = np.where(sq > 1.0, 1.0 / n, 0.0)
        else:
            raise ValueError(f"unknown aggregate {aggregate!r}")
        grad = np.zeros(self._layout.size)
        active = np.nonzero(weights)[0]
        if active.size:
            self._double_backward(cache, inner, gx, weights, active, grad)
        return value, grad, gx

    def _double_backward(self, cache, inner, gx, weights, rows, grad):
        """Accumulate ``d/d params sum_n weights_n |gx_n|^2`` into ``grad``.

        The input-gradient pass is linear in the incoming vector and
        multilinear in the weights once the activation pattern is fixed,
        so its adjoint runs forward through the layers.
        """
        gu, ga = inner
        L = len(self.config.hidden_widths)
        ubar = [None] * (L + 2)
        ubar[1] = 2.0 * weights[rows, None] * gx[rows]
        for l in range(1, L + 1):
            mask = cache.z[l][rows] > 0
            gz = ga[l][rows] * mask
            grad[self._offset(("W", l))] += (ubar[l].T @ gz).ravel()
            abar = (ubar[l] @ self.W[l]) * mask
            ubar[l + 1] = abar if ubar[l + 1] is None else ubar[l + 1] + abar
            for j in range(l + 2, L + 2):
                key = (l, j)
                if key in self.P:
                    grad[self._offset(("P", l, j))] += \
                        (abar.T @ gu[j][rows]).ravel()
                    contrib = abar @ self.P[key]
                    ubar[j] = contrib if ubar[j] is None else ubar[j] + contrib
        delta = cache.slope[rows]
        grad[self._offset(("w_out",))] += ubar[L + 1].T @ delta

    # ------------------------------------------------------------------
    # checkpoints

    def to_dict(self):
        return {
            "format": "partialot-potential",
            "version": CHECKPOINT_VERSION,
            "config": {
                "input_dim": self.config.input_dim,
                "hidden_widths": list(self.config.hidden_widths),
                "skip_connections": [list(s) for s in
                                     self.config.skip_connections],
            },
            "learnable_h": self.learnable_h,
            "h": self._h_fixed,
            "params": self.params.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "partialot-potential":
            raise ValueError("not a potential checkpoint")
        if d.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('version')}")
        cfg = NetConfig(**d["config"])
        net = cls(cfg, h=d["h"] if d["h"] is not None else 1.0,
                  learnable_h=d["learnable_h"])
        net.set_params(d["params"])
        return net

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
