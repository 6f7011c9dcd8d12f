"""Primal-dual interior-point solver, branch-and-bound, and an enumeration oracle.

The interior-point core handles ``min 1/2 x'Qx + c'x  s.t. Ax = b, x >= 0``
with diagonal ``Q``.  With a positive barrier weight it stops on the central
path at that weight instead of driving complementarity to zero.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .model import StandardFormProgram

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class SolverConfig:
    tol_kkt: float = 1e-8
    max_iters: int = 200
    step_fraction: float = 0.995
    bnb_int_tol: float = 1e-6
    bnb_node_limit: int = 100_000
    bnb_gap_tol: float = 1e-9

    def __post_init__(self):
        for name in ("tol_kkt", "bnb_int_tol", "bnb_gap_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.max_iters < 1 or self.bnb_node_limit < 1:
            raise ValueError("iteration and node limits must be positive")


@dataclass
class Solution:
    x: np.ndarray
    nu: np.ndarray
    s_dual: np.ndarray
    objective: float
    status: str
    kkt_residual: float
    mu_final: float
    iterations: int = 0
    mu_history: list = field(default_factory=list)
    nodes: int = 0

    @property
    def ok(self):
        return self.status == OPTIMAL


class SolverError(RuntimeError):
    pass


# -- interior-point core -----------------------------------------------------


@dataclass
class _Raw:
    x: np.ndarray
    nu: np.ndarray
    s: np.ndarray
    status: str
    residual: float
    mu: float
    iterations: int
    history: list


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-v[neg] / dv[neg]))


def _factor(A, h):
    """Solver for the Newton system ``[[-diag(h), A'], [A, 0]] (dx, dnu) = (r1, r2)``.

    Uses Cholesky on the normal equations while ``h`` is well scaled and
    pivoted LU on the augmented matrix once it spreads out near the optimum,
    where degenerate rows make the normal equations numerically singular.
    """
    p, n = A.shape
    if p and np.max(h) < 1e8 * np.min(h):
        d = 1.0 / h
        try:
            f = sla.cho_factor((A * d) @ A.T, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            pass
        else:

            def normal(r):
                r1, r2 = r[:n], r[n:]
                dnu = sla.cho_solve(f, r2 + A @ (d * r1), check_finite=False)
                return np.concatenate([d * (A.T @ dnu - r1), dnu])

            return normal
    K = np.zeros((n + p, n + p))
    K[np.arange(n), np.arange(n)] = -h
    K[:n, n:] = A.T
    K[n:, :n] = A
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu = sla.lu_factor(K, check_finite=False)
    if not np.all(np.isfinite(lu[0])) or np.min(np.abs(np.diag(lu[0])), initial=1.0) == 0.0:
        raise np.linalg.LinAlgError("Newton system is singular")
    return lambda r: sla.lu_solve(lu, r, check_finite=False)


def _kkt_residuals(x, nu, s, c, A, b, qd, mu_target):
    r_dual = qd * x + c - A.T @ nu - s
    r_prim = A @ x - b
    comp = x * s - mu_target
    res = max(
        float(np.max(np.abs(r_prim), initial=0.0)),
        float(np.max(np.abs(r_dual), initial=0.0)),
        float(np.max(np.abs(comp), initial=0.0)),
    )
    return r_dual, r_prim, res


def _ipm(c, A, b, qd, mu_target, cfg):
    """Mehrotra predictor-corrector on dense data."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _ipm_loop(c, A, b, qd, mu_target, cfg)


def _start(c, A, b):
    """Least-squares starting point shifted into the positive orthant."""
    p, n = A.shape
    ones = (np.ones(n), np.zeros(p), np.ones(n))
    if p == 0:
        return ones
    try:
        f = sla.cho_factor(A @ A.T, check_finite=False)
    except np.linalg.LinAlgError:
        return ones
    x = A.T @ sla.cho_solve(f, b, check_finite=False)
    nu = sla.cho_solve(f, A @ c, check_finite=False)
    s = c - A.T @ nu
    x = x + max(-1.5 * x.min(), 0.0)
    s = s + max(-1.5 * s.min(), 0.0)
    xs = float(x @ s)
    x = x + 0.5 * xs / max(s.sum(), 1e-12)
    s = s + 0.5 * xs / max(x.sum(), 1e-12)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(s))):
        return ones
    return np.maximum(x, 1e-2), nu, np.maximum(s, 1e-2)


def _ipm_loop(c, A, b, qd, mu_target, cfg):
    p, n = A.shape
    x, nu, s = _start(c, A, b)
    history = []
    target_prev = math.inf
    bscale = 1.0 + float(np.max(np.abs(b), initial=0.0))
    stalls = 0
    polish, polished = 0, None
    res = math.inf
    for it in range(cfg.max_iters + 1):
        r_dual, r_prim, res = _kkt_residuals(x, nu, s, c, A, b, qd, mu_target)
        gap = float(x @ s) / n
        if res <= cfg.tol_kkt:
            done = _Raw(x, nu, s, "converged", res, mu_target if mu_target > 0 else gap, it, history)
            # a converged mu-center gets extra Newton steps while they keep paying off
            if mu_target == 0 or polished is not None and res > 0.5 * polished.residual or polish >= 3:
                return done if polished is None or res < polished.residual else polished
            polished = done
            polish += 1
        if it == cfg.max_iters:
            break
        if not np.all(np.isfinite(x)) or np.max(x) > 1e12 or np.max(s) > 1e14:
            return _Raw(x, nu, s, "diverged", res, gap, it, history)

        h = qd + s / x
        try:
            solve = _factor(A, h)
        except np.linalg.LinAlgError:
            return _Raw(x, nu, s, "stalled", res, gap, it, history)

        def direction(rhs3):
            # augmented solve plus refinement against the full Newton system
            e1, e2, e3 = -r_dual, -r_prim, rhs3
            dx, dnu, ds = np.zeros(n), np.zeros(p), np.zeros(n)
            for _ in range(3):
                sol = solve(np.concatenate([-(e1 + e3 / x), e2]))
                ddx, ddnu = sol[:n], sol[n:]
                dds = (e3 - s * ddx) / x
                dx, dnu, ds = dx + ddx, dnu + ddnu, ds + dds
                e1 = -r_dual - (qd * dx - A.T @ dnu - ds)
                e2 = -r_prim - A @ dx
                e3 = rhs3 - (s * dx + x * ds)
                scale = max(1.0, float(np.max(np.abs(dx))), float(np.max(np.abs(ds))))
                if max(np.max(np.abs(e1), initial=0.0), np.max(np.abs(e2), initial=0.0)) < 1e-13 * scale:
                    break
            return dx, dnu, ds

        centering = mu_target > 0 and gap < 10.0 * mu_target
        if centering:
            target = mu_target
            dx, dnu, ds = direction(mu_target - x * s)
        else:
            dx_a, _, ds_a = direction(-x * s)
            alpha_a = min(1.0, _max_step(x, dx_a), _max_step(s, ds_a))
            mu_aff = float((x + alpha_a * dx_a) @ (s + alpha_a * ds_a)) / n
            sigma = min(1.0, (mu_aff / gap) ** 3) if gap > 0 else 0.0
            target = min(sigma * gap, 0.95 * target_prev)
            if mu_target > 0:
                target = max(target, mu_target)
            dx, dnu, ds = direction(target - x * s - dx_a * ds_a)
        if target < target_prev:
            history.append(target)
        target_prev = target

        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(ds)) and np.all(np.isfinite(dnu))):
            return _Raw(x, nu, s, "stalled", res, gap, it, history)
        alpha = min(1.0, cfg.step_fraction * min(_max_step(x, dx), _max_step(s, ds)))
        x = x + alpha * dx
        s = s + alpha * ds
        nu = nu + alpha * dnu
        x = np.maximum(x, 1e-300)
        s = np.maximum(s, 1e-300)

        if alpha < 1e-8:
            stalls += 1
        else:
            stalls = 0
        tiny_gap = float(x @ s) / n < 1e-14 * bscale
        primal_stuck = float(np.max(np.abs(r_prim), initial=0.0)) > 1e3 * cfg.tol_kkt * bscale
        if stalls >= 5 or (tiny_gap and primal_stuck and it > 30):
            return _Raw(x, nu, s, "stalled", res, gap, it + 1, history)
    return _Raw(x, nu, s, "max_iters", res, float(x @ s) / max(n, 1), cfg.max_iters, history)


def _purify(raw, c, A, b, qd, cfg):
    """Snap an LP interior solution onto its optimal face.

    Variables whose dual slack dominates are set to zero and the remaining
    ones are recovered from ``A_B x_B = b`` by least squares.  The snapped
    point is kept only if it is feasible and no worse than the interior one.
    """
    x, s = raw.x, raw.s
    basic = x > s
    if not np.any(basic):
        return raw
    xb, *_ = np.linalg.lstsq(A[:, basic], b, rcond=None)
    bscale = 1.0 + float(np.max(np.abs(b), initial=0.0))
    if np.min(xb, initial=0.0) < -1e-9 * bscale:
        return raw
    xn = np.zeros_like(x)
    xn[basic] = np.maximum(xb, 0.0)
    if np.max(np.abs(A @ xn - b), initial=0.0) > 1e-10 * bscale:
        return raw
    old, new = float(c @ x), float(c @ xn)
    if new > old + 1e-7 * (1.0 + abs(old)):
        return raw
    _, _, res = _kkt_residuals(xn, raw.nu, s, c, A, b, qd, 0.0)
    if res > cfg.tol_kkt:
        return raw
    return _Raw(xn, raw.nu, s, raw.status, res, raw.mu, raw.iterations, raw.history)


def _phase_one_infeasible(A, b, cfg):
    """True when ``Ax = b, x >= 0`` has no solution (artificial-variable test)."""
    p, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A1 = np.hstack([A, np.diag(sign)])
    c1 = np.concatenate([np.zeros(n), np.ones(p)])
    raw = _ipm(c1, A1, b, np.zeros(n + p), 0.0, cfg)
    value = float(raw.x[n:].sum())
    bscale = 1.0 + float(np.max(np.abs(b), initial=0.0))
    return raw.status == "converged" and value > 1e-6 * bscale


def _has_descent_ray(c, A, qd, cfg):
    """True when a direction ``d >= 0, Ad = 0, c'd < 0`` exists on the linear part."""
    p, n = A.shape
    lin = qd == 0
    if not np.any(lin):
        return False
    Al = A[:, lin]
    m = Al.shape[1]
    A2 = np.vstack([np.hstack([Al, np.zeros((p, 1))]), np.ones((1, m + 1))])
    b2 = np.concatenate([np.zeros(p), [1.0]])
    c2 = np.concatenate([c[lin], [0.0]])
    raw = _ipm(c2, A2, b2, np.zeros(m + 1), 0.0, cfg)
    return raw.status == "converged" and float(c2 @ raw.x) < -1e-9


def _solve_dense(c, A, b, qd, mu_target, cfg):
    p, n = A.shape
    if n == 0:
        ok = np.max(np.abs(b), initial=0.0) <= cfg.tol_kkt
        empty = np.zeros(0)
        return _Raw(empty, np.zeros(p), empty, "converged" if ok else INFEASIBLE, 0.0, 0.0, 0, [])
    if p == 0:
        if np.any((qd == 0) & (c < 0)):
            return _Raw(np.zeros(n), np.zeros(0), np.zeros(n), UNBOUNDED, math.inf, 0.0, 0, [])
    raw = _ipm(c, A, b, qd, mu_target, cfg)
    if raw.status == "converged":
        if mu_target == 0 and not np.any(qd):
            raw = _purify(raw, c, A, b, qd, cfg)
        return raw
    if p and _phase_one_infeasible(A, b, cfg):
        raw.status = INFEASIBLE
    elif _has_descent_ray(c, A, qd, cfg):
        raw.status = UNBOUNDED
    else:
        raw.status = ITERATION_LIMIT
    return raw


def _objective(prog, x):
    value = float(prog.c @ x) + 0.5 * float(x @ (prog.quad_diag() * x)) + prog.offset
    if prog.barrier_weight > 0:
        value -= prog.barrier_weight * float(np.sum(np.log(np.maximum(x, 1e-300))))
    return value


def _status_of(raw):
    return OPTIMAL if raw.status == "converged" else raw.status


def solve_relaxation(prog: StandardFormProgram, cfg: SolverConfig | None = None) -> Solution:
    """Solve the continuous relaxation of ``prog`` (integrality ignored).

    For a barrier program the returned point is the center of the central path
    at ``prog.barrier_weight``.  Failures are reported through ``status``.
    """
    cfg = cfg or SolverConfig()
    if prog.n_vars == 0:
        raise SolverError("program has no variables")
    A = prog.A.toarray()
    raw = _solve_dense(prog.c, A, prog.b, prog.quad_diag(), prog.barrier_weight, cfg)
    status = _status_of(raw)
    return Solution(
        x=raw.x,
        nu=raw.nu,
        s_dual=raw.s,
        objective=_objective(prog, raw.x) if status == OPTIMAL else math.nan,
        status=status,
        kkt_residual=raw.residual,
        mu_final=raw.mu,
        iterations=raw.iterations,
        mu_history=raw.history,
    )


# -- bounded subproblems -----------------------------------------------------


class _Infeasible(Exception):
    pass


def _presolve(A, b, lo, hi, integral, tol):
    """Fix variables forced by singleton, empty and zero-forcing rows.

    Returns (fixed values with NaN marking free columns, mask of kept rows).
    """
    p, n = A.shape
    fixed = np.where(lo == hi, lo, np.nan)
    rows = np.ones(p, dtype=bool)
    nz = A != 0
    free = np.isnan(fixed)
    rhs = b - A[:, ~free] @ fixed[~free]
    counts = (nz & free).sum(axis=1)
    scale = tol * (1.0 + np.abs(b))

    def fix(j, v):
        nonlocal rhs
        fixed[j] = v
        free[j] = False
        rhs = rhs - A[:, j] * v
        counts[nz[:, j]] -= 1

    changed = True
    while changed:
        changed = False
        for r in np.flatnonzero(rows):
            if counts[r] == 0:
                if abs(rhs[r]) > scale[r]:
                    raise _Infeasible
                rows[r] = False
                continue
            cols = np.flatnonzero(nz[r] & free)
            coefs = A[r, cols]
            if counts[r] == 1:
                j = cols[0]
                v = rhs[r] / coefs[0]
                if abs(v) < scale[r]:
                    v = 0.0
                if v < lo[j] - tol or v > hi[j] + tol:
                    raise _Infeasible
                if integral[j]:
                    if abs(v - round(v)) > 1e-6:
                        raise _Infeasible
                    v = float(round(v))
                fix(j, min(max(v, lo[j]), hi[j]))
                rows[r] = False
                changed = True
                continue
            same_sign = np.all(coefs > 0) or np.all(coefs < 0)
            if same_sign and np.all(lo[cols] == 0):
                if abs(rhs[r]) <= scale[r]:
                    for j in cols:
                        fix(j, 0.0)
                    rows[r] = False
                    changed = True
                elif np.sign(rhs[r]) != np.sign(coefs[0]):
                    raise _Infeasible
    return fixed, rows


def _solve_bounded(prog, A, lo, hi, cfg, qd=None):
    """Solve the relaxation with extra bounds ``lo <= x <= hi``.

    Returns a Solution on the full variable space; ``kkt_residual`` refers
    to the reduced subproblem actually solved.
    """
    c, b = prog.c, prog.b
    qd = prog.quad_diag() if qd is None else qd
    p, n = A.shape
    try:
        fixed, rows = _presolve(A, b, lo, hi, prog.integrality, 1e-9)
    except _Infeasible:
        return _failed(n, p, INFEASIBLE)
    free = np.isnan(fixed)
    fx = np.where(free, 0.0, fixed)
    shift = np.where(free, lo, 0.0)
    base = fx + shift
    Ar = A[np.ix_(rows, free)]
    br = b[rows] - A[rows] @ base
    cr = c[free] + qd[free] * shift[free]
    qr = qd[free]
    ub = np.flatnonzero(np.isfinite(hi[free]))
    if ub.size:
        m = Ar.shape[1]
        extra = np.zeros((ub.size, m + ub.size))
        extra[np.arange(ub.size), ub] = 1.0
        extra[np.arange(ub.size), m + np.arange(ub.size)] = 1.0
        Ar = np.vstack([np.hstack([Ar, np.zeros((Ar.shape[0], ub.size))]), extra])
        br = np.concatenate([br, (hi[free] - lo[free])[ub]])
        cr = np.concatenate([cr, np.zeros(ub.size)])
        qr = np.concatenate([qr, np.zeros(ub.size)])
    raw = _solve_dense(cr, Ar, br, qr, 0.0, cfg)
    status = _status_of(raw)
    if status != OPTIMAL:
        return _failed(n, p, status, raw.iterations)
    x = base.copy()
    x[free] += raw.x[: int(free.sum())]
    nu = np.zeros(p)
    nu[rows] = raw.nu[: int(rows.sum())]
    s_dual = qd * x + c - A.T @ nu
    s_dual[free] = raw.s[: int(free.sum())]
    return Solution(
        x=x,
        nu=nu,
        s_dual=s_dual,
        objective=_objective(prog, x),
        status=OPTIMAL,
        kkt_residual=raw.residual,
        mu_final=raw.mu,
        iterations=raw.iterations,
        mu_history=raw.history,
    )


def _failed(n, p, status, iterations=0):
    return Solution(
        x=np.full(n, np.nan),
        nu=np.full(p, np.nan),
        s_dual=np.full(n, np.nan),
        objective=math.nan,
        status=status,
        kkt_residual=math.inf,
        mu_final=math.nan,
        iterations=iterations,
    )


def solve_fixed(prog: StandardFormProgram, values: dict, cfg: SolverConfig | None = None) -> Solution:
    """Solve ``prog`` with the variables in ``values`` (index -> value) fixed."""
    cfg = cfg or SolverConfig()
    n = prog.n_vars
    lo, hi = np.zeros(n), np.full(n, np.inf)
    for j, v in values.items():
        lo[j] = hi[j] = v
    return _solve_bounded(prog, prog.A.toarray(), lo, hi, cfg)


# -- branch and bound --------------------------------------------------------


def _pick_branch(x, mask, tol):
    idx = np.flatnonzero(mask)
    frac = x[idx] - np.floor(x[idx])
    dist = np.minimum(frac, 1.0 - frac)
    candidates = dist > tol
    if not np.any(candidates):
        return None
    score = np.where(candidates, np.abs(frac - 0.5), np.inf)
    return int(idx[int(np.argmin(score))])


def branch_and_bound(prog: StandardFormProgram, cfg: SolverConfig | None = None) -> Solution:
    """Best-first branch-and-bound over the LP relaxation.

    Branches on the integer variable whose fractional part is closest to 0.5
    (lowest index on ties).  Integer-feasible nodes are re-solved with every
    integer variable fixed, so the incumbent is an exact point on its face.
    """
    cfg = cfg or SolverConfig()
    if prog.quad_weight > 0 or prog.barrier_weight > 0:
        raise ValueError("branch_and_bound needs the plain LP variant (lam = mu = 0)")
    A = prog.A.toarray()
    n = prog.n_vars
    mask = prog.integrality
    lo0, hi0 = np.zeros(n), np.full(n, np.inf)

    root = _solve_bounded(prog, A, lo0, hi0, cfg)
    if root.status != OPTIMAL:
        root.nodes = 1
        return root

    best, incumbent = math.inf, None
    counter = itertools.count()
    heap = [(root.objective, next(counter), lo0, hi0, root)]
    nodes = 1
    relaxation_bound = root.objective
    stopped = False

    while heap:
        bound, _, lo, hi, sol = heapq.heappop(heap)
        if bound >= best - cfg.bnb_gap_tol:
            continue
        j = _pick_branch(sol.x, mask, cfg.bnb_int_tol)
        if j is None:
            fixed_lo, fixed_hi = lo.copy(), hi.copy()
            fixed_lo[mask] = fixed_hi[mask] = np.rint(sol.x[mask])
            polished = _solve_bounded(prog, A, fixed_lo, fixed_hi, cfg)
            nodes += 1
            candidate = polished if polished.status == OPTIMAL else sol
            if candidate.objective < best:
                best, incumbent = candidate.objective, candidate
            continue
        if nodes >= cfg.bnb_node_limit:
            stopped = True
            break
        v = sol.x[j]
        down_hi = hi.copy()
        down_hi[j] = math.floor(v)
        up_lo = lo.copy()
        up_lo[j] = math.ceil(v)
        for clo, chi in ((lo, down_hi), (up_lo, hi)):
            if clo[j] > chi[j]:
                continue
            child = _solve_bounded(prog, A, clo, chi, cfg)
            nodes += 1
            if child.status == UNBOUNDED:
                child.nodes = nodes
                return child
            if child.status == OPTIMAL and child.objective < best - cfg.bnb_gap_tol:
                heapq.heappush(heap, (child.objective, next(counter), clo, chi, child))

    if stopped:
        log.warning("branch-and-bound stopped at the node limit (%d nodes)", nodes)
        if incumbent is None:
            out = _failed(n, prog.n_rows, ITERATION_LIMIT)
        else:
            out = incumbent
            out.status = ITERATION_LIMIT
        out.nodes = nodes
        return out
    if incumbent is None:
        out = _failed(n, prog.n_rows, INFEASIBLE)
        out.nodes = nodes
        return out
    incumbent.nodes = nodes
    log.debug("bnb: %d nodes, root bound %.6g, optimum %.6g", nodes, relaxation_bound, best)
    return incumbent


# -- enumeration oracle ------------------------------------------------------


def brute_force_oracle(prog: StandardFormProgram, cfg: SolverConfig | None = None) -> Solution:
    """Exact MILP optimum by enumerating every route pattern.

    For each 0/1 assignment of the route block, every visit variable is set
    to its largest admissible value (visits carry no cost and only relax the
    delivery links), respecting a finite per-period visit budget by trying each
    maximal subset.  The remaining continuous program is solved with the
    interior-point core.
    """
    cfg = cfg or SolverConfig()
    lay = prog.layout
    if lay is None:
        raise ValueError("oracle needs a program built from an instance")
    n, t, k = lay.n_customers, lay.horizon, lay.n_routes
    if k * t > 20 or n * t > 16:
        raise ValueError(f"instance too large for oracle (K*T={k * t}, N*T={n * t})")
    A = prog.A.toarray()
    zs, ys = lay["z"], lay["y"]
    i4 = lay.rows("I4")
    covers = (A[i4, zs] < 0).astype(int)  # (N*T) x (K*T)
    i5 = lay.rows("I5")
    budget = None if i5.stop == i5.start else int(round(prog.b[i5.start]))

    best = None
    lo_base, hi_base = np.zeros(prog.n_vars), np.full(prog.n_vars, np.inf)
    for pattern in itertools.product((0.0, 1.0), repeat=k * t):
        z = np.array(pattern)
        cover = (covers @ z > 0).reshape(n, t)
        for y in _visit_choices(cover, budget):
            lo, hi = lo_base.copy(), hi_base.copy()
            lo[zs] = hi[zs] = z
            lo[ys] = hi[ys] = y.ravel()
            sol = _solve_bounded(prog, A, lo, hi, cfg)
            if sol.status == OPTIMAL and (best is None or sol.objective < best.objective - 1e-12):
                best = sol
    if best is None:
        return _failed(prog.n_vars, prog.n_rows, INFEASIBLE)
    return best


def _visit_choices(cover, budget):
    if budget is None:
        yield cover.astype(float)
        return
    n, t = cover.shape
    per_period = []
    for tt in range(t):
        avail = np.flatnonzero(cover[:, tt])
        size = min(budget, avail.size)
        per_period.append(list(itertools.combinations(avail, size)))
    for combo in itertools.product(*per_period):
        y = np.zeros((n, t))
        for tt, chosen in enumerate(combo):
            y[list(chosen), tt] = 1.0
        yield y


def primal_residual(prog: StandardFormProgram, x) -> float:
    return float(np.max(np.abs(prog.A @ x - prog.b), initial=0.0))
