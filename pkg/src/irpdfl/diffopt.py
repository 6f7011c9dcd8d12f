"""Sensitivities of relaxed solutions with respect to costs and right-hand sides.

Both routes apply the implicit function theorem to the optimality conditions
at the returned point and solve one transposed linear system per call (a
vector-Jacobian product), never the full Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .model import StandardFormProgram
from .solver import OPTIMAL, Solution

DEGENERACY_TOL = 1e-7


class DegenerateKKTError(np.linalg.LinAlgError):
    """The optimality system cannot be differentiated at this point."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class FiniteDifferenceError(RuntimeError):
    def __init__(self, index, cause):
        self.index = index
        super().__init__(f"evaluation failed while perturbing coordinate {index}: {cause}")


@dataclass(frozen=True)
class GradientResult:
    dL_dc: np.ndarray
    dL_db: np.ndarray
    method: str
    solution_ref: Solution


def _check_adjoint(prog, sol, dL_dx):
    g = np.asarray(dL_dx, dtype=float)
    if g.shape != (prog.n_vars,):
        raise ValueError(f"dL_dx has shape {g.shape}, expected ({prog.n_vars},)")
    if sol.status != OPTIMAL:
        raise ValueError(f"cannot differentiate a solution with status {sol.status!r}")
    return g


def _solve_transposed(J, rhs, near_active):
    try:
        lu = sla.lu_factor(J.T, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DegenerateKKTError(f"KKT system is singular near index {near_active}", near_active) from exc
    if np.min(np.abs(np.diag(lu[0]))) == 0.0:
        raise DegenerateKKTError(f"KKT system is singular near index {near_active}", near_active)
    w = sla.lu_solve(lu, rhs, check_finite=False)
    if not np.all(np.isfinite(w)):
        raise DegenerateKKTError(f"KKT solve produced non-finite values near index {near_active}", near_active)
    return w


def differentiate_qp(prog: StandardFormProgram, sol: Solution, dL_dx) -> GradientResult:
    """Gradient of ``L(x*)`` w.r.t. ``c`` and ``b`` for the regularized QP.

    Differentiates stationarity ``Qx + c - A'nu - s = 0``, feasibility
    ``Ax = b`` and complementarity ``x * s = 0``.  Complementarity rows are
    scaled by ``1 / (x_j + s_j)`` before the solve, which leaves the
    solution unchanged but keeps the system well conditioned at a strictly
    complementary point.
    """
    if not prog.quad_weight > 0:
        raise ValueError("QP differentiation requires strict convexity (quad_weight > 0)")
    g = _check_adjoint(prog, sol, dL_dx)
    x, nu, s = sol.x, sol.nu, sol.s_dual
    both_small = np.flatnonzero((x < DEGENERACY_TOL) & (s < DEGENERACY_TOL))
    if both_small.size:
        j = int(both_small[0])
        raise DegenerateKKTError(
            f"degenerate complementarity at index {j} (x={x[j]:.3g}, s={s[j]:.3g})", j
        )

    A = prog.A.toarray()
    p, n = A.shape
    w = 1.0 / (x + s)
    J = np.zeros((2 * n + p, 2 * n + p))
    J[:n, :n] = np.diag(prog.quad_diag())
    J[:n, n : n + p] = -A.T
    J[:n, n + p :] = -np.eye(n)
    J[n : n + p, :n] = A
    J[n + p :, :n] = np.diag(s * w)
    J[n + p :, n + p :] = np.diag(x * w)
    rhs = np.concatenate([g, np.zeros(p + n)])
    adj = _solve_transposed(J, rhs, int(np.argmin(np.maximum(x, s))))
    return GradientResult(dL_dc=-adj[:n], dL_db=adj[n : n + p], method="kkt_qp", solution_ref=sol)


def differentiate_barrier(prog: StandardFormProgram, sol: Solution, dL_dx) -> GradientResult:
    """Gradient of ``L(x*)`` at the center of the log-barrier problem.

    Differentiates ``Qx + c - A'nu - mu / x = 0`` and ``Ax = b``.
    """
    mu = prog.barrier_weight
    if not mu > 0:
        raise ValueError("barrier differentiation requires barrier_weight > 0")
    g = _check_adjoint(prog, sol, dL_dx)
    x = sol.x
    if np.any(x <= 0):
        j = int(np.argmax(x <= 0))
        raise ValueError(f"barrier differentiation needs x > 0; x[{j}] = {x[j]}")
    A = prog.A.toarray()
    p, n = A.shape
    J = np.zeros((n + p, n + p))
    J[:n, :n] = np.diag(prog.quad_diag() + mu / x**2)
    J[:n, n:] = -A.T
    J[n:, :n] = A
    adj = _solve_transposed(J, np.concatenate([g, np.zeros(p)]), int(np.argmin(x)))
    return GradientResult(dL_dc=-adj[:n], dL_db=adj[n:], method="barrier", solution_ref=sol)


def differentiate(prog: StandardFormProgram, sol: Solution, dL_dx) -> GradientResult:
    """Dispatch on the program variant."""
    if prog.barrier_weight > 0:
        return differentiate_barrier(prog, sol, dL_dx)
    return differentiate_qp(prog, sol, dL_dx)


def demand_gradient(prog: StandardFormProgram, grad: GradientResult) -> np.ndarray:
    """Pull ``dL/db`` back to an N x T demand gradient through ``b = b0 + B_d vec(d)``."""
    lay = prog.layout
    return (prog.demand_map.T @ grad.dL_db).reshape(lay.n_customers, lay.horizon)


def finite_difference_jacobian(f, point, h=1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``point`` (rows: outputs, columns: inputs)."""
    if not h > 0:
        raise ValueError("step h must be positive")
    x0 = np.asarray(point, dtype=float)
    cols = []
    for j in range(x0.size):
        e = np.zeros_like(x0)
        e[j] = h
        try:
            hi = np.atleast_1d(np.asarray(f(x0 + e), dtype=float))
            lo = np.atleast_1d(np.asarray(f(x0 - e), dtype=float))
        except Exception as exc:
            raise FiniteDifferenceError(j, exc) from exc
        cols.append((hi - lo) / (2.0 * h))
    return np.column_stack(cols) if cols else np.zeros((0, 0))


def relative_error(a, b, floor=1e-6) -> float:
    """``||a - b|| / max(||a||, ||b||, floor)``.

    The floor keeps two round-off-sized vectors (both true zeros) from
    looking wildly different.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / scale)


def random_program(rng, dim, kind="qp", weight=None):
    """Random strictly feasible program with ``dim`` variables.

    ``kind="qp"`` gives a regularized QP; ``kind="barrier"`` a bounded LP (the
    last row caps the sum of the variables) carrying a barrier weight.
    """
    m = max(1, dim // 3)
    if kind == "qp":
        A = rng.normal(size=(m, dim))
        x0 = rng.uniform(0.5, 2.0, size=dim)
        lam = rng.uniform(0.1, 1.0) if weight is None else weight
        return StandardFormProgram.from_arrays(rng.normal(size=dim), A, A @ x0, quad_weight=lam)
    if kind == "barrier":
        n = dim - 1
        A = np.vstack([np.hstack([rng.normal(size=(m, n)), np.zeros((m, 1))]), np.ones((1, dim))])
        x0 = rng.uniform(0.5, 2.0, size=dim)
        A_x0 = A @ x0
        mu = 1e-2 if weight is None else weight
        return StandardFormProgram.from_arrays(rng.normal(size=dim), A, A_x0, barrier_weight=mu)
    raise ValueError(f"unknown program kind {kind!r}")


def gradient_check(prog: StandardFormProgram, dL_dx, h: float, cfg=None) -> tuple[float, float]:
    """Compare analytic ``dL/dc`` and ``dL/db`` with central differences.

    ``L = dL_dx' x*(c, b)``.  Returns the relative errors for c and b.
    """
    from .solver import SolverConfig, solve_relaxation

    cfg = cfg or SolverConfig(tol_kkt=1e-12, max_iters=400)
    g = np.asarray(dL_dx, dtype=float)
    sol = solve_relaxation(prog, cfg)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"base solve failed with status {sol.status}")
    grad = differentiate(prog, sol, g)

    def loss(c=None, b=None):
        p = prog
        if c is not None:
            p = p.with_cost(c)
        if b is not None:
            p = p.with_rhs(b)
        s = solve_relaxation(p, cfg)
        if s.status != OPTIMAL:
            raise RuntimeError(f"perturbed solve failed with status {s.status}")
        return g @ s.x

    fd_c = finite_difference_jacobian(lambda c: loss(c=c), prog.c, h)[0]
    fd_b = finite_difference_jacobian(lambda b: loss(b=b), prog.b, h)[0]
    return relative_error(grad.dL_dc, fd_c), relative_error(grad.dL_db, fd_b)
