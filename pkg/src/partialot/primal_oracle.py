"""Exact LP solvers for the partial Wasserstein-1 problems.

Two problems share one LP core. With ``a``/``b`` the weights of the two
measures and ``C`` the Euclidean cost matrix:

* partial mass:  ``min <C, P>``  s.t. ``P >= 0, P 1 <= a, P^T 1 <= b,
  sum(P) >= m``
* distance threshold: ``min <C - h, P>`` s.t. ``P >= 0, P 1 <= a,
  P^T 1 <= b``

Both are solved with HiGHS (through :func:`scipy.optimize.linprog`) at tight
tolerances and every solution is checked against its LP dual before it is
returned.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .measures import DiscreteMeasure, cost_matrix, diameter, total_mass

FEAS_TOL = 1e-9
GAP_TOL = 1e-9
_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


class InfeasibleProblem(ValueError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling between ``alpha`` (rows) and ``beta`` (columns)."""

    rows: np.ndarray
    cols: np.ndarray
    masses: np.ndarray
    shape: tuple
    objective_value: float
    kind: str = "mass"
    threshold: float = 0.0
    dual_objective: float = float("nan")

    @property
    def total_mass(self):
        return float(self.masses.sum())

    @property
    def transport_cost(self):
        """``<C, P>`` without the ``-h m(P)`` term."""
        if self.kind == "distance":
            return self.objective_value + self.threshold * self.total_mass
        return self.objective_value

    def dense(self):
        out = np.zeros(self.shape)
        np.add.at(out, (self.rows, self.cols), self.masses)
        return out

    def row_sums(self):
        return np.bincount(self.rows, self.masses, minlength=self.shape[0])

    def col_sums(self):
        return np.bincount(self.cols, self.masses, minlength=self.shape[1])

    def entries(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(),
                        self.masses.tolist()))


def _empty_plan(shape, kind, threshold):
    z = np.zeros(0, dtype=np.int64)
    return TransportPlan(z, z, np.zeros(0), shape, 0.0, kind, float(threshold),
                         0.0)


def _solve_lp(C, a, b, kind, m=0.0, h=0.0):
    """Shared LP core; returns a certified :class:`TransportPlan`."""
    q, r = C.shape
    if kind == "distance":
        # pairs with C > h only ever worsen the objective
        ii, jj = np.nonzero(C <= h)
        c = C[ii, jj] - h
    else:
        ii, jj = np.nonzero(np.ones_like(C, dtype=bool))
        c = C[ii, jj]
    nv = ii.size
    if nv == 0:
        return _empty_plan((q, r), kind, h)

    var = np.arange(nv)
    n_con = q + r + (kind == "mass")
    row_idx = [ii, q + jj]
    rhs = [a, b]
    if kind == "mass":
        row_idx.append(np.full(nv, q + r))
        rhs.append([-m])
    vals = np.ones(nv * len(row_idx))
    if kind == "mass":
        vals[2 * nv:] = -1.0
    A_ub = sp.csr_matrix((vals, (np.concatenate(row_idx),
                                 np.tile(var, len(row_idx)))),
                         shape=(n_con, nv))
    b_ub = np.concatenate([np.asarray(v, dtype=np.float64) for v in rhs])

    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method="highs",
                  options=_HIGHS_OPTIONS)
    if res.status == 2:
        raise InfeasibleProblem("partial transport LP is infeasible")
    if res.status != 0:
        raise SolverError(f"LP solver failed: {res.message}")

    x = np.maximum(res.x, 0.0)
    y = np.asarray(res.ineqlin.marginals)  # <= 0 for a minimization

    viol = A_ub @ x - b_ub
    scale = max(1.0, float(np.abs(b_ub).max()))
    if viol.max() > FEAS_TOL * scale:
        raise SolverError(f"primal infeasibility {viol.max():.3e}")
    dual_viol = A_ub.T @ y - c
    if dual_viol.max() > FEAS_TOL * max(1.0, float(np.abs(c).max())):
        raise SolverError(f"dual infeasibility {dual_viol.max():.3e}")
    primal = float(c @ x)
    dual = float(b_ub @ y)
    if primal - dual > GAP_TOL * max(1.0, abs(primal)):
        raise SolverError(f"duality gap {primal - dual:.3e}")

    keep = x > 0
    return TransportPlan(ii[keep], jj[keep], x[keep], (q, r), primal, kind,
                         float(h), dual)


def _check_dims(alpha, beta):
    if alpha.dim != beta.dim:
        raise ValueError(f"dimension mismatch: {alpha.dim} vs {beta.dim}")


def solve_partial_mass(alpha, beta, m):
    """Optimal plan transporting at least ``m`` units of mass.

    ``objective_value`` is the partial-mass Wasserstein-1 discrepancy.
    """
    _check_dims(alpha, beta)
    ma, mb = total_mass(alpha), total_mass(beta)
    if m < 0:
        raise ValueError("mass threshold must be nonnegative")
    if m > min(ma, mb) * (1 + 1e-12):
        raise InfeasibleProblem(
            f"m={m} exceeds min(m_alpha, m_beta)={min(ma, mb)}")
    if m == 0:
        return _empty_plan((len(alpha), len(beta)), "mass", 0.0)
    # clamp roundoff above min(ma, mb) so the LP stays feasible
    m = min(m, ma, mb)
    C = cost_matrix(alpha, beta)
    plan = _solve_lp(C, alpha.weights, beta.weights, "mass", m=m)
    if plan.total_mass < m - FEAS_TOL * max(1.0, m):
        raise SolverError("returned plan moves less than m")
    return plan


def solve_distance_threshold(alpha, beta, h):
    """Optimal plan for ``min <C, P> - h * mass(P)`` with free mass.

    No pair farther apart than ``h`` carries mass in the returned plan.
    """
    _check_dims(alpha, beta)
    if h < 0:
        raise ValueError("distance threshold must be nonnegative")
    if h == 0:
        return _empty_plan((len(alpha), len(beta)), "distance", 0.0)
    C = cost_matrix(alpha, beta)
    return _solve_lp(C, alpha.weights, beta.weights, "distance", h=h)


def wasserstein1(alpha, beta, tol=1e-9):
    ma, mb = total_mass(alpha), total_mass(beta)
    if abs(ma - mb) > tol * max(1.0, ma, mb):
        raise ValueError(f"unbalanced masses: {ma} vs {mb}")
    return solve_partial_mass(alpha, beta, min(ma, mb))


def _certificate_term(alpha, beta, m, h):
    plan = solve_distance_threshold(alpha, beta, h)
    return plan.objective_value + m * h, m - plan.total_mass


def duality_certificate(alpha, beta, m, h_grid, refine=True, max_refine=60):
    """Lower bound ``sup_h L_{D,h} + m h`` of the partial-mass discrepancy.

    The function ``h -> L_{D,h} + m h`` is concave and piecewise linear, and
    ``m - mass(P_h)`` is a supergradient at ``h``. The grid maximum is
    returned when ``refine`` is false. Otherwise the bracket around the best
    grid point is searched by intersecting supporting lines until the upper
    and lower bounds meet; every candidate is evaluated exactly, so the result
    is never above the primal value.
    """
    h_grid = np.unique(np.asarray(h_grid, dtype=np.float64))
    if h_grid.size == 0:
        raise ValueError("empty h grid")
    if np.any(h_grid < 0):
        raise ValueError("h grid must be nonnegative")
    vals, slopes = zip(*(_certificate_term(alpha, beta, m, h) for h in h_grid))
    vals = np.array(vals)
    slopes = np.array(slopes)
    k = int(np.argmax(vals))
    best = float(vals[k])
    if not refine:
        return best

    # bracket [lo, hi] with slope(lo) >= 0 >= slope(hi) where available
    lo = (h_grid[k - 1], vals[k - 1], slopes[k - 1]) if k > 0 else None
    hi = (h_grid[k + 1], vals[k + 1], slopes[k + 1]) \
        if k + 1 < h_grid.size else None
    mid = (h_grid[k], vals[k], slopes[k])
    if mid[2] > 0:
        lo = mid
        if hi is None:
            # beyond the grid the slope stays positive until h exceeds
            # every pairwise distance; the top of that range is safe
            top = 2.0 * diameter(alpha, beta) + float(h_grid[-1])
            v, s = _certificate_term(alpha, beta, m, top)
            hi = (top, v, s)
    elif mid[2] < 0:
        hi = mid
        if lo is None:
            v, s = _certificate_term(alpha, beta, m, 0.0)
            lo = (0.0, v, s)
    else:
        return best
    if lo is None or hi is None:
        return best
    for _ in range(max_refine):
        (h0, v0, s0), (h1, v1, s1) = lo, hi
        if s0 <= 0 or s1 >= 0 or s0 == s1:
            break
        hx = (v1 - v0 + s0 * h0 - s1 * h1) / (s0 - s1)
        hx = min(max(hx, h0), h1)
        upper = v0 + s0 * (hx - h0)
        v, s = _certificate_term(alpha, beta, m, hx)
        best = max(best, v)
        if upper - v <= 1e-12 * max(1.0, abs(v)):
            break
        if s > 0:
            lo = (hx, v, s)
        elif s < 0:
            hi = (hx, v, s)
        else:
            break
    return float(best)


def omitted_mass(plan, alpha, beta, tol=1e-9):
    """Untransported parts ``alpha - P 1`` and ``beta - P^T 1``."""
    if plan.shape != (len(alpha), len(beta)):
        raise ValueError("plan shape does not match the measures")
    ra = alpha.weights - plan.row_sums()
    rb = beta.weights - plan.col_sums()
    worst = min(ra.min(), rb.min())
    if worst < -tol * max(1.0, float(alpha.weights.max()),
                          float(beta.weights.max())):
        raise InfeasibleProblem(
            f"plan exceeds a marginal by {-worst:.3e}")
    ra = np.maximum(ra, 0.0)
    rb = np.maximum(rb, 0.0)
    return (DiscreteMeasure(alpha.points, ra, allow_zero_mass=True),
            DiscreteMeasure(beta.points, rb, allow_zero_mass=True))
