"""Compile an instance into a standard-form program ``min c'x  s.t. Ax = b, x >= 0``.

Variables are laid out in contiguous blocks::

    q     N*T   delivery quantity q[i, t]
    s     N*T   customer end-of-period inventory s[i, t]
    S     T     supplier inventory S[t]
    z     K*T   route k used in period t
    y     N*T   customer i visited in period t
    slack one per inequality row, in row order

Within a block the index is ``i * T + t`` (or ``k * T + t``).  Rows come in
the order E1 (customer balance), E2 (supplier balance), then the inequality
groups I1 customer capacity, I2 vehicle capacity, I3 delivery needs a visit,
I4 visit needs a route, I5 visit budget (only when finite), UB binary upper
bounds.  Demand enters only the E1 right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .instance import IrpInstance, check_instance, demand_matrix

VARIANTS = ("plain", "regularized", "barrier")
ROW_GROUPS = ("E1", "E2", "I1", "I2", "I3", "I4", "I5", "UB")


@dataclass(frozen=True)
class VariableLayout:
    n_customers: int
    horizon: int
    n_routes: int
    n_inequalities: int
    row_groups: dict = field(default_factory=dict, compare=False)

    @property
    def blocks(self):
        n, t, k = self.n_customers, self.horizon, self.n_routes
        sizes = [("q", n * t), ("s", n * t), ("S", t), ("z", k * t), ("y", n * t), ("slack", self.n_inequalities)]
        out, offset = {}, 0
        for name, size in sizes:
            out[name] = slice(offset, offset + size)
            offset += size
        return out

    def __getitem__(self, name):
        return self.blocks[name]

    @property
    def n_structural(self):
        n, t, k = self.n_customers, self.horizon, self.n_routes
        return 3 * n * t + t + k * t

    @property
    def size(self):
        return self.n_structural + self.n_inequalities

    def block(self, x, name):
        """View block ``name`` of ``x`` shaped as (rows, T)."""
        part = np.asarray(x)[self.blocks[name]]
        if name in ("slack", "S"):
            return part
        return part.reshape(-1, self.horizon)

    def rows(self, group):
        return self.row_groups[group]


@dataclass(frozen=True, eq=False)
class StandardFormProgram:
    """``min c'x + lam*||x||^2 - mu*sum(log x)  s.t.  Ax = b, x >= 0``.

    ``b = b0 + demand_map @ vec(d)``.  ``reg_scope`` selects whether the
    quadratic term covers every variable or only the route block.
    """

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    integrality: np.ndarray
    layout: VariableLayout | None = None
    demand_map: sp.csr_matrix | None = None
    b0: np.ndarray | None = None
    quad_weight: float = 0.0
    barrier_weight: float = 0.0
    reg_scope: str = "all"
    offset: float = 0.0

    def __post_init__(self):
        A = sp.csr_matrix(self.A, dtype=float)
        object.__setattr__(self, "A", A)
        for name in ("c", "b"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).copy())
        p, k = A.shape
        if self.c.shape != (k,) or self.b.shape != (p,):
            raise ValueError(f"inconsistent shapes: A {A.shape}, c {self.c.shape}, b {self.b.shape}")
        mask = np.zeros(k, dtype=bool) if self.integrality is None else np.asarray(self.integrality, dtype=bool)
        object.__setattr__(self, "integrality", mask)
        if self.quad_weight < 0 or self.barrier_weight < 0:
            raise ValueError("quad_weight and barrier_weight must be nonnegative")
        if self.reg_scope not in ("all", "routes"):
            raise ValueError(f"reg_scope must be 'all' or 'routes', got {self.reg_scope!r}")
        for arr in (self.c, self.b, self.integrality):
            arr.setflags(write=False)

    @classmethod
    def from_arrays(cls, c, A, b, integrality=None, quad_weight=0.0, barrier_weight=0.0):
        return cls(c=c, A=A, b=b, integrality=integrality, quad_weight=quad_weight, barrier_weight=barrier_weight)

    @property
    def n_vars(self):
        return self.A.shape[1]

    @property
    def n_rows(self):
        return self.A.shape[0]

    @property
    def variant(self):
        if self.barrier_weight > 0:
            return "barrier"
        if self.quad_weight > 0:
            return "regularized"
        return "plain"

    def quad_diag(self):
        """Diagonal of the Hessian ``Q`` of the quadratic term (``2*lam`` on its scope)."""
        q = np.zeros(self.n_vars)
        if self.quad_weight > 0:
            if self.reg_scope == "routes" and self.layout is not None:
                q[self.layout["z"]] = 2.0 * self.quad_weight
            else:
                q[:] = 2.0 * self.quad_weight
        return q

    def with_rhs(self, b):
        return replace(self, b=np.asarray(b, dtype=float))

    def with_cost(self, c):
        return replace(self, c=np.asarray(c, dtype=float))

    def with_weights(self, quad_weight=None, barrier_weight=None):
        return replace(
            self,
            quad_weight=self.quad_weight if quad_weight is None else quad_weight,
            barrier_weight=self.barrier_weight if barrier_weight is None else barrier_weight,
        )


def build_standard_form(
    inst: IrpInstance,
    d=None,
    variant: str = "plain",
    lam: float = 0.0,
    mu: float = 0.0,
    reg_scope: str = "all",
) -> StandardFormProgram:
    """Build the standard-form program for ``inst`` under demand ``d``.

    ``variant`` is ``"plain"``, ``"regularized"`` (uses ``lam``) or
    ``"barrier"`` (uses ``mu``).  ``d`` defaults to the instance demand.
    """
    check_instance(inst)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if lam < 0 or mu < 0:
        raise ValueError(f"lam and mu must be nonnegative, got lam={lam}, mu={mu}")
    d = demand_matrix(inst.demand if d is None else d, inst)

    n, t, k = inst.n_customers, inst.horizon, inst.n_routes
    vmax = inst.visit_limit
    n_ineq = n * t + t + n * t + n * t + (t if vmax is not None else 0) + k * t + n * t
    layout = VariableLayout(n, t, k, n_ineq)
    blk = layout.blocks
    q0, s0, S0, z0, y0, sl0 = (blk[name].start for name in ("q", "s", "S", "z", "y", "slack"))

    def q(i, tt):
        return q0 + i * t + tt

    def s(i, tt):
        return s0 + i * t + tt

    def z(kk, tt):
        return z0 + kk * t + tt

    def y(i, tt):
        return y0 + i * t + tt

    rows, cols, vals, rhs = [], [], [], []
    groups = {}
    state = {"row": 0, "slack": sl0}

    def add(entries, value, inequality):
        r = state["row"]
        for col, v in entries:
            rows.append(r)
            cols.append(col)
            vals.append(v)
        if inequality:
            rows.append(r)
            cols.append(state["slack"])
            vals.append(1.0)
            state["slack"] += 1
        rhs.append(value)
        state["row"] += 1

    def group(name, build):
        start = state["row"]
        build()
        groups[name] = slice(start, state["row"])

    M, I0 = inst.capacity_customer, inst.initial_inventory
    a = inst.incidence()

    def e1():
        for i in range(n):
            for tt in range(t):
                entries = [(s(i, tt), 1.0), (q(i, tt), -1.0)]
                if tt > 0:
                    entries.append((s(i, tt - 1), -1.0))
                add(entries, I0[i] if tt == 0 else 0.0, False)

    def e2():
        for tt in range(t):
            entries = [(S0 + tt, 1.0)] + [(q(i, tt), 1.0) for i in range(n)]
            if tt > 0:
                entries.append((S0 + tt - 1, -1.0))
            init = inst.supplier_initial if tt == 0 else 0.0
            add(entries, inst.production_per_period + init, False)

    def i1():
        for i in range(n):
            for tt in range(t):
                add([(s(i, tt), 1.0)], M[i], True)

    def i2():
        for tt in range(t):
            add([(q(i, tt), 1.0) for i in range(n)], inst.vehicle_capacity, True)

    def i3():
        for i in range(n):
            for tt in range(t):
                add([(q(i, tt), 1.0), (y(i, tt), -M[i])], 0.0, True)

    def i4():
        for i in range(n):
            for tt in range(t):
                entries = [(y(i, tt), 1.0)] + [(z(kk, tt), -1.0) for kk in range(k) if a[i, kk]]
                add(entries, 0.0, True)

    def i5():
        for tt in range(t):
            add([(y(i, tt), 1.0) for i in range(n)], float(vmax), True)

    def ub():
        for kk in range(k):
            for tt in range(t):
                add([(z(kk, tt), 1.0)], 1.0, True)
        for i in range(n):
            for tt in range(t):
                add([(y(i, tt), 1.0)], 1.0, True)

    group("E1", e1)
    group("E2", e2)
    group("I1", i1)
    group("I2", i2)
    group("I3", i3)
    group("I4", i4)
    if vmax is not None:
        group("I5", i5)
    else:
        groups["I5"] = slice(state["row"], state["row"])
    group("UB", ub)
    assert state["slack"] == layout.size

    p = state["row"]
    A = sp.csr_matrix((vals, (rows, cols)), shape=(p, layout.size))
    layout = replace(layout, row_groups=groups)

    c = np.zeros(layout.size)
    c[blk["s"]] = np.repeat(inst.holding_customer, t)
    c[blk["S"]] = inst.holding_supplier
    c[blk["z"]] = np.repeat(inst.route_costs(), t)

    integrality = np.zeros(layout.size, dtype=bool)
    integrality[blk["z"]] = True
    integrality[blk["y"]] = True

    e1_rows = np.arange(groups["E1"].start, groups["E1"].stop)
    demand_map = sp.csr_matrix((-np.ones(n * t), (e1_rows, np.arange(n * t))), shape=(p, n * t))
    b0 = np.asarray(rhs, dtype=float)
    b0.setflags(write=False)
    b = b0 + demand_map @ d.ravel()

    return StandardFormProgram(
        c=c,
        A=A,
        b=b,
        integrality=integrality,
        layout=layout,
        demand_map=demand_map,
        b0=b0,
        quad_weight=float(lam) if variant == "regularized" else 0.0,
        barrier_weight=float(mu) if variant == "barrier" else 0.0,
        reg_scope=reg_scope,
    )


def demand_to_rhs(prog: StandardFormProgram, d) -> np.ndarray:
    """Right-hand side ``b0 + B_d vec(d)`` of ``prog`` for demand ``d``."""
    if prog.demand_map is None:
        raise ValueError("program carries no demand map")
    d = np.asarray(d, dtype=float)
    n, t = prog.layout.n_customers, prog.layout.horizon
    if d.shape != (n, t):
        raise ValueError(f"demand shape {d.shape} does not match program ({n}, {t})")
    return prog.b0 + prog.demand_map @ d.ravel()


def with_demand(prog: StandardFormProgram, d) -> StandardFormProgram:
    return prog.with_rhs(demand_to_rhs(prog, d))


def evaluate_objective(prog: StandardFormProgram, x, mode: str = "linear") -> float:
    """Objective value at ``x`` under ``mode`` in {linear, regularized, barrier}.

    The regularized mode adds the program's quadratic term (``lam * ||x||^2``
    over its scope); barrier adds both the quadratic term and
    ``-mu * sum(log x)`` and rejects points that are not strictly positive.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (prog.n_vars,):
        raise ValueError(f"x has shape {x.shape}, expected ({prog.n_vars},)")
    value = float(prog.c @ x) + prog.offset
    if mode == "linear":
        return value
    value += 0.5 * float(x @ (prog.quad_diag() * x))
    if mode == "regularized":
        return value
    if mode == "barrier":
        if np.any(x <= 0):
            j = int(np.argmax(x <= 0))
            raise ValueError(f"barrier objective undefined: x[{j}] = {x[j]} is not positive")
        return value - prog.barrier_weight * float(np.sum(np.log(x)))
    raise ValueError(f"unknown mode {mode!r}")


# -- plans -------------------------------------------------------------------


@dataclass(frozen=True)
class PlanOutcome:
    """A decoded delivery and routing plan."""

    q: np.ndarray
    s: np.ndarray
    S: np.ndarray
    z: np.ndarray
    y: np.ndarray
    planned_objective: float

    def to_dict(self):
        return {
            "planned_objective": self.planned_objective,
            "q": self.q.tolist(),
            "s": self.s.tolist(),
            "S": self.S.tolist(),
            "z": self.z.tolist(),
            "y": self.y.tolist(),
        }


def decode_plan(prog: StandardFormProgram, x, integral: bool = True) -> PlanOutcome:
    """Split a program point into plan blocks; rounds z and y when ``integral``."""
    lay = prog.layout
    x = np.asarray(x, dtype=float)
    z, y = lay.block(x, "z").copy(), lay.block(x, "y").copy()
    if integral:
        z, y = np.rint(z), np.rint(y)
    return PlanOutcome(
        q=lay.block(x, "q").copy(),
        s=lay.block(x, "s").copy(),
        S=lay.block(x, "S").copy(),
        z=z,
        y=y,
        planned_objective=float(prog.c @ x),
    )


def plan_cost(inst: IrpInstance, plan: PlanOutcome) -> float:
    """Holding plus routing cost of a plan computed straight from its quantities."""
    holding = inst.holding_supplier * plan.S.sum() + float(inst.holding_customer @ plan.s.sum(axis=1))
    routing = float(inst.route_costs() @ plan.z.sum(axis=1))
    return float(holding + routing)


def check_plan(inst: IrpInstance, d, plan: PlanOutcome, tol: float = 1e-6) -> list[str]:
    """Replay every model constraint on a decoded plan; returns the violations."""
    d = np.asarray(d, dtype=float)
    out = []
    n, t = inst.n_customers, inst.horizon
    M = inst.capacity_customer
    prev_s = inst.initial_inventory.copy()
    prev_S = inst.supplier_initial
    a = inst.incidence()
    for tt in range(t):
        for i in range(n):
            if abs(plan.s[i, tt] - (prev_s[i] + plan.q[i, tt] - d[i, tt])) > tol:
                out.append(f"customer balance ({i},{tt})")
            if plan.s[i, tt] < -tol:
                out.append(f"customer inventory nonnegative ({i},{tt})")
            if plan.s[i, tt] > M[i] + tol:
                out.append(f"customer capacity ({i},{tt})")
            if plan.q[i, tt] < -tol:
                out.append(f"delivery nonnegative ({i},{tt})")
            if plan.q[i, tt] > M[i] * plan.y[i, tt] + tol:
                out.append(f"delivery requires visit ({i},{tt})")
            if plan.y[i, tt] > a[i] @ plan.z[:, tt] + tol:
                out.append(f"visited customer on a route ({i},{tt})")
        S_expected = prev_S + inst.production_per_period - plan.q[:, tt].sum()
        if abs(plan.S[tt] - S_expected) > tol:
            out.append(f"supplier balance ({tt})")
        if plan.S[tt] < -tol:
            out.append(f"supplier inventory nonnegative ({tt})")
        if plan.q[:, tt].sum() > inst.vehicle_capacity + tol:
            out.append(f"vehicle capacity ({tt})")
        if inst.visit_limit is not None and plan.y[:, tt].sum() > inst.visit_limit + tol:
            out.append(f"visit budget ({tt})")
        prev_s, prev_S = plan.s[:, tt], plan.S[tt]
    for name, arr in (("z", plan.z), ("y", plan.y)):
        if np.any(np.abs(arr - np.rint(arr)) > tol) or np.any(arr < -tol) or np.any(arr > 1 + tol):
            out.append(f"{name} binary")
    return out
