"""First-order optimizers acting in place on flat parameter vectors.

``step`` always *descends*; callers maximizing an objective pass the
negated gradient.
"""

import numpy as np


class Adam:
    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grad):
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != params.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match "
                             f"parameters {params.shape}")
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        elif self.m.shape != params.shape:
            raise ValueError("optimizer state does not match parameters")
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mhat = self.m / (1 - self.beta1 ** self.t)
        vhat = self.v / (1 - self.beta2 ** self.t)
        params -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
        return params


class RMSprop:
    def __init__(self, lr=1e-4, decay=0.99, eps=1e-8):
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.v = None

    def step(self, params, grad):
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != params.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match "
                             f"parameters {params.shape}")
        if self.v is None:
            self.v = np.zeros_like(params)
        elif self.v.shape != params.shape:
            raise ValueError("optimizer state does not match parameters")
        self.v = self.decay * self.v + (1 - self.decay) * grad * grad
        params -= self.lr * grad / (np.sqrt(self.v) + self.eps)
        return params


class SGD:
    def __init__(self, lr=1e-3):
        self.lr = lr

    def step(self, params, grad):
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != params.shape:
            raise ValueError("gradient shape does not match parameters")
        params -= self.lr * grad
        return params


OPTIMIZERS = {"adam": Adam, "rmsprop": RMSprop, "sgd": SGD}


def make_optimizer(name, lr):
    try:
        return OPTIMIZERS[name.lower()](lr=lr)
    except KeyError:
        raise ValueError(f"unknown optimizer {name!r}") from None
