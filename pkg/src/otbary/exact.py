"""Exact discrete-discrete optimal transport with cost ||x - y||^p.

The solver is the transportation simplex from :mod:`._netsimplex`; dual
potentials are read off the optimal basis tree, canonicalized by a double
c-transform, and pinned to zero at the last atom so their magnitude can be
checked against the a-priori bound 2 * p * R^p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.spatial.distance import cdist

from ._netsimplex import STATUS_OK, transport_simplex
from .measures import DiscreteMeasure

__all__ = [
    "CostSpec",
    "TransportPlan",
    "DualPotential",
    "SolverError",
    "cost_matrix",
    "solve_discrete_ot",
    "semidual_value",
    "brute_force_ot",
    "exact_potential_bound",
]


class SolverError(RuntimeError):
    """A solver failed to converge (cycling, iteration cap, LP failure)."""


@dataclass(frozen=True)
class CostSpec:
    """Ground cost ||x - y||^p with exponent p >= 1."""

    p: float = 2.0

    def __post_init__(self):
        if not self.p >= 1.0:
            raise ValueError(f"cost exponent must be >= 1, got {self.p}")


def cost_matrix(x: np.ndarray, y: np.ndarray, p: float) -> np.ndarray:
    """Pairwise cost ||x_i - y_j||^p as a dense (m, k) matrix."""
    if p == 2.0:
        return cdist(x, y, "sqeuclidean")
    d = cdist(x, y, "euclidean")
    if p == 1.0:
        return d
    return d**p


@dataclass(frozen=True)
class TransportPlan:
    """Coupling matrix with prescribed marginals."""

    matrix: np.ndarray
    source_weights: np.ndarray
    target_weights: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.float64)
        if np.min(mat) < -1e-15:
            raise ValueError("transport plan has a negative entry")
        row_err = np.max(np.abs(mat.sum(axis=1) - self.source_weights))
        col_err = np.max(np.abs(mat.sum(axis=0) - self.target_weights))
        if row_err > 1e-9 or col_err > 1e-9:
            raise ValueError(
                f"plan marginals violated: row {row_err:.2e}, col {col_err:.2e}"
            )

    def marginal_error(self) -> float:
        """L1 violation of both marginals."""
        mat = self.matrix
        return float(
            np.abs(mat.sum(axis=1) - self.source_weights).sum()
            + np.abs(mat.sum(axis=0) - self.target_weights).sum()
        )


@dataclass(frozen=True)
class DualPotential:
    """Target-side dual vector with one entry pinned to zero."""

    w: np.ndarray
    normalization: int

    def __post_init__(self):
        if not (0 <= self.normalization < self.w.shape[0]):
            raise ValueError("normalization index out of range")
        if self.w[self.normalization] != 0.0:
            raise ValueError("pinned potential entry must be exactly zero")


def exact_potential_bound(p: float, ball_radius: float) -> float:
    """Sup-norm bound on normalized exact-OT target potentials."""
    return 2.0 * p * ball_radius**p


def _check_dims(source: DiscreteMeasure, target: DiscreteMeasure):
    if source.dim != target.dim:
        raise ValueError(
            f"dimension mismatch: source d={source.dim}, target d={target.dim}"
        )


def solve_discrete_ot(
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    cost: CostSpec = CostSpec(),
):
    """Exact W_p^p between two discrete measures.

    Expects canonicalized inputs (distinct atoms, positive weights).

    Returns
    -------
    value : float
        The optimal transport cost W_p^p(source, target).
    plan : TransportPlan
        An optimal coupling.
    potentials : DualPotential
        Optimal target-side semi-dual vector, double-c-transformed and
        shifted so its last entry is zero.
    """
    _check_dims(source, target)
    C = cost_matrix(source.points, target.points, cost.p)
    value, plan_mat, _, v = _solve_matrix(C, source.weights, target.weights)
    w_star = _canonical_potentials(C, source.weights, v)
    plan = TransportPlan(plan_mat, source.weights, target.weights)
    return value, plan, DualPotential(w_star, w_star.shape[0] - 1)


def _solve_matrix(C: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Run the simplex kernel, retrying with a larger tie-breaking
    perturbation if the pivot cap is hit."""
    m, k = C.shape
    cap = 200 * (m + k) + 20000
    Cc = np.ascontiguousarray(C, dtype=np.float64)
    ac = np.ascontiguousarray(a, dtype=np.float64)
    bc = np.ascontiguousarray(b, dtype=np.float64)
    for pert in (1e-12, 1e-10):
        status, plan, u, v, value, _ = transport_simplex(Cc, ac, bc, pert, cap)
        if status == STATUS_OK:
            return float(value), plan, u, v
    raise SolverError(
        "transportation simplex hit its pivot cap (degenerate cycling)"
    )


def _canonical_potentials(C: np.ndarray, a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Double c-transform of an optimal target potential, pinned at the last
    atom.  Keeps optimality and enforces the c-concavity the sup-norm bound
    relies on."""
    u_star = np.min(C - v[None, :], axis=1)
    w_star = np.min(C - u_star[:, None], axis=0)
    return w_star - w_star[-1]


def semidual_value(
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    w,
    cost: CostSpec = CostSpec(),
) -> float:
    """Semi-dual objective at target potential `w`:

        sum_i a_i * min_j (||x_i - y_j||^p - w_j) + sum_j pi_j * w_j

    By weak duality this never exceeds W_p^p(source, target).
    """
    if isinstance(w, DualPotential):
        w = w.w
    w = np.asarray(w, dtype=np.float64)
    if w.shape[0] != target.num_atoms:
        raise ValueError(
            f"potential length {w.shape[0]} != target atom count {target.num_atoms}"
        )
    C = cost_matrix(source.points, target.points, cost.p)
    ctrans = np.min(C - w[None, :], axis=1)
    return float(source.weights @ ctrans + target.weights @ w)


def brute_force_ot(
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    cost: CostSpec = CostSpec(),
) -> float:
    """Test oracle: solve the transportation LP with a generic dense LP
    solver (HiGHS), an independent code path from the simplex kernel.

    Only intended for tiny instances (m * k <= 64).
    """
    _check_dims(source, target)
    m, k = source.num_atoms, target.num_atoms
    if m * k > 64:
        raise ValueError(f"instance too large for brute force: {m}x{k}")
    C = cost_matrix(source.points, target.points, cost.p)
    a_eq = np.zeros((m + k, m * k))
    for i in range(m):
        a_eq[i, i * k : (i + 1) * k] = 1.0
    for j in range(k):
        a_eq[m + j, j::k] = 1.0
    b_eq = np.concatenate([source.weights, target.weights])
    res = optimize.linprog(
        C.ravel(),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if not res.success:
        raise SolverError(f"LP oracle failed: {res.message}")
    return float(res.fun)
