"""Parametrized point transforms with exact Jacobians.

Points are rows. Every transform keeps its parameters in one flat vector
``params`` (views expose the structured pieces) and offers

* ``apply(Y, idx=None)``: transformed rows; ``idx`` names which source
  points the rows are (needed for per-point offsets),
* ``vjp(Y, G, idx=None)``: gradient of ``sum_j <G_j, T(y_j)>`` w.r.t.
  ``params``,
* ``jacobian(y, j=None)``: dense ``D x n_params`` Jacobian at one point.
"""

import numpy as np


class NonRigidTransform:
    """``T(y_j) = y_j A + t + V_j`` with a per-point offset ``V_j``."""

    mode = "nonrigid"

    def __init__(self, n_points, dim=3, A=None, t=None, V=None):
        self.dim = int(dim)
        self.n_points = int(n_points)
        d = self.dim
        self.params = np.zeros(d * d + d + self.n_points * d)
        self._bind()
        self.A[...] = np.eye(d) if A is None else A
        if t is not None:
            self.t[...] = t
        if V is not None:
            V = np.asarray(V, dtype=np.float64)
            if V.shape != (self.n_points, d):
                raise ValueError(
                    f"V must have shape {(self.n_points, d)}, got {V.shape}")
            self.V[...] = V
        if not np.all(np.isfinite(self.params)):
            raise ValueError("transform parameters must be finite")

    def _bind(self):
        d = self.dim
        self.A = self.params[:d * d].reshape(d, d)
        self.t = self.params[d * d:d * d + d]
        self.V = self.params[d * d + d:].reshape(self.n_points, d)

    def copy(self):
        out = NonRigidTransform.__new__(NonRigidTransform)
        out.dim, out.n_points = self.dim, self.n_points
        out.params = self.params.copy()
        out._bind()
        return out

    def _rows(self, Y, idx):
        Y = np.asarray(Y, dtype=np.float64)
        if Y.ndim != 2 or Y.shape[1] != self.dim:
            raise ValueError(f"expected (n, {self.dim}) points, got {Y.shape}")
        if idx is None:
            if Y.shape[0] != self.n_points:
                raise ValueError(
                    f"transform has {self.n_points} offsets but got "
                    f"{Y.shape[0]} points; pass idx")
            idx = np.arange(self.n_points)
        return Y, np.asarray(idx)

    def apply(self, Y, idx=None):
        Y, idx = self._rows(Y, idx)
        return Y @ self.A + self.t + self.V[idx]

    def vjp(self, Y, G, idx=None):
        Y, idx = self._rows(Y, idx)
        d = self.dim
        out = np.zeros_like(self.params)
        out[:d * d] = (Y.T @ G).ravel()
        out[d * d:d * d + d] = G.sum(axis=0)
        gV = np.zeros((self.n_points, d))
        np.add.at(gV, idx, G)
        out[d * d + d:] = gV.ravel()
        return out

    def jacobian(self, y, j):
        d = self.dim
        y = np.asarray(y, dtype=np.float64).reshape(d)
        J = np.zeros((d, self.params.size))
        for k in range(d):
            # d T_k / d A[a, k] = y_a
            J[k, [a * d + k for a in range(d)]] = y
            J[k, d * d + k] = 1.0
            J[k, d * d + d + j * d + k] = 1.0
        return J

    def linear_part(self):
        return self.A.copy()

    def to_dict(self):
        return {"mode": self.mode, "A": self.A.tolist(), "t": self.t.tolist()}


def quaternion_to_matrix(q):
    """Rotation matrix of the unit quaternion ``q / |q|`` (w, x, y, z)."""
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q)
    if n == 0:
        raise ValueError("zero quaternion")
    w, x, y, z = q / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _rotation_partials(qn):
    """``dR/dq_k`` for the rotation formula evaluated at (unit) ``qn``."""
    w, x, y, z = qn
    return 2.0 * np.array([
        [[0, -z, y], [z, 0, -x], [-y, x, 0]],
        [[0, y, z], [y, -2 * x, -w], [z, w, -2 * x]],
        [[-2 * y, x, w], [x, 0, z], [-w, z, -2 * y]],
        [[-2 * z, -w, x], [w, -2 * z, y], [x, y, 0]],
    ])


def matrix_to_quaternion(R):
    """Unit quaternion (w >= 0) of a rotation matrix."""
    R = np.asarray(R, dtype=np.float64)
    tr = np.trace(R)
    if tr > 0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s,
             (R[1, 0] - R[0, 1]) / s]
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = 2.0 * np.sqrt(1.0 + R[i, i] - R[j, j] - R[k, k])
        q = np.zeros(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    q = np.asarray(q)
    return q if q[0] >= 0 else -q


def axis_angle_matrix(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    q = np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])
    return quaternion_to_matrix(q)


class RigidTransform:
    """``T(y) = R(q) y + t``; ``q`` is stored unnormalized."""

    mode = "rigid"

    def __init__(self, quaternion=(1.0, 0.0, 0.0, 0.0), t=(0.0, 0.0, 0.0)):
        self.dim = 3
        self.params = np.zeros(7)
        self._bind()
        self.q[...] = quaternion
        self.t[...] = t
        if not np.all(np.isfinite(self.params)) or not np.any(self.q):
            raise ValueError("invalid rigid parameters")

    def _bind(self):
        self.q = self.params[:4]
        self.t = self.params[4:]

    def copy(self):
        out = RigidTransform.__new__(RigidTransform)
        out.dim = 3
        out.params = self.params.copy()
        out._bind()
        return out

    @property
    def rotation(self):
        return quaternion_to_matrix(self.q)

    def linear_part(self):
        return self.rotation

    def apply(self, Y, idx=None):
        Y = np.asarray(Y, dtype=np.float64)
        if Y.ndim != 2 or Y.shape[1] != 3:
            raise ValueError(f"expected (n, 3) points, got {Y.shape}")
        return Y @ self.rotation.T + self.t

    def _dq(self, gR):
        """Chain ``d/dR`` back to the unnormalized quaternion."""
        n = np.linalg.norm(self.q)
        qn = self.q / n
        g_unit = np.einsum("kab,ab->k", _rotation_partials(qn), gR)
        return (g_unit - qn * (qn @ g_unit)) / n

    def vjp(self, Y, G, idx=None):
        Y = np.asarray(Y, dtype=np.float64)
        out = np.zeros(7)
        out[:4] = self._dq(G.T @ Y)
        out[4:] = G.sum(axis=0)
        return out

    def jacobian(self, y, j=None):
        y = np.asarray(y, dtype=np.float64).reshape(3)
        J = np.zeros((3, 7))
        for k in range(3):
            gR = np.zeros((3, 3))
            gR[k] = y
            J[k, :4] = self._dq(gR)
            J[k, 4 + k] = 1.0
        return J

    def to_dict(self):
        return {"mode": self.mode, "quaternion": self.q.tolist(),
                "rotation": self.rotation.tolist(), "t": self.t.tolist()}


class TranslationTransform:
    """``T(y) = y + t`` in any dimension."""

    mode = "translation"

    def __init__(self, dim, t=None):
        self.dim = int(dim)
        self.params = np.zeros(self.dim)
        self.t = self.params
        if t is not None:
            self.t[...] = t

    def copy(self):
        return TranslationTransform(self.dim, self.t.copy())

    def linear_part(self):
        return np.eye(self.dim)

    def apply(self, Y, idx=None):
        return np.asarray(Y, dtype=np.float64) + self.t

    def vjp(self, Y, G, idx=None):
        return G.sum(axis=0)

    def jacobian(self, y, j=None):
        return np.eye(self.dim)

    def to_dict(self):
        return {"mode": self.mode, "t": self.t.tolist()}


def rotation_error_deg(R, R_true):
    """Angle of ``R R_true^T`` in degrees."""
    c = (np.trace(R @ np.asarray(R_true).T) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))
