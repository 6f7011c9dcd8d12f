"""Two-stage and decision-focused training, regret metrics, and the error sweep.

Two regret notions live here.  :func:`objective_regret` perturbs the cost
vector and compares minimizers over one shared feasible set, so it can never
be negative.  :func:`realized_regret` plans against a demand forecast and
replays the plan against the true demand with shortage and overflow
penalties, which is the only way to score demand errors (demand sits in the
right-hand side, not in the costs).
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit
from scipy.stats import spearmanr

from . import predictor as pr
from .diffopt import DegenerateKKTError, demand_gradient, differentiate
from .instance import IrpInstance, _generate
from .model import PlanOutcome, StandardFormProgram, build_standard_form, decode_plan
from .solver import OPTIMAL, SolverConfig, branch_and_bound, solve_relaxation

log = logging.getLogger(__name__)

MODES = ("two_stage", "dfl")
DIFF_METHODS = ("kkt_qp", "barrier")
SWEEP_COLUMNS = ("epsilon", "trial", "mse", "objective_regret", "realized_regret")
TRAIN_COLUMNS = ("epoch", "train_loss", "val_mse", "val_realized_regret")


class RegretUndefinedError(RuntimeError):
    """A planning solve did not reach optimality, so no regret exists."""


@dataclass(frozen=True)
class Penalties:
    shortage: float
    overflow: float

    def __post_init__(self):
        if not (self.shortage > 0 and self.overflow > 0):
            raise ValueError(f"penalties must be positive, got {self.shortage}, {self.overflow}")


def default_penalties(inst: IrpInstance, shortage=None, overflow=None) -> Penalties:
    """Shortage defaults to ``10 * max holding cost * T``; overflow to the shortage rate."""
    if shortage is None:
        h_max = max(float(np.max(inst.holding_customer)), inst.holding_supplier)
        shortage = 10.0 * h_max * inst.horizon
    return Penalties(float(shortage), float(shortage if overflow is None else overflow))


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "two_stage"
    epochs: int = 10
    lr: float = 1e-2
    lam: float = 0.1
    diff_method: str = "kkt_qp"
    mu: float = 1e-3
    shortage_penalty: float | None = None
    overflow_penalty: float | None = None
    shortage_aware_loss: bool = True
    seed: int = 0
    hidden: tuple = (32, 32)
    activation: str = "tanh"
    eval_every: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.diff_method not in DIFF_METHODS:
            raise ValueError(f"diff_method must be one of {DIFF_METHODS}, got {self.diff_method!r}")
        if self.epochs < 0 or self.eval_every < 1:
            raise ValueError("epochs must be >= 0 and eval_every >= 1")
        if self.lr < 0:
            raise ValueError(f"learning rate must be nonnegative, got {self.lr}")
        if self.mode == "dfl" and self.diff_method == "kkt_qp" and not self.lam > 0:
            raise ValueError("kkt_qp differentiation needs lam > 0")
        if self.mode == "dfl" and self.diff_method == "barrier" and not self.mu > 0:
            raise ValueError("barrier differentiation needs mu > 0")
        for p in (self.shortage_penalty, self.overflow_penalty):
            if p is not None and not p > 0:
                raise ValueError(f"penalties must be positive, got {p}")

    def penalties(self, inst):
        return default_penalties(inst, self.shortage_penalty, self.overflow_penalty)


# -- planning and regret -------------------------------------------------------


def plan_for(inst: IrpInstance, d, cfg: SolverConfig | None = None) -> PlanOutcome:
    """Optimal integer plan under demand ``d`` (branch-and-bound)."""
    prog = build_standard_form(inst, d)
    sol = branch_and_bound(prog, cfg)
    if sol.status != OPTIMAL:
        raise RegretUndefinedError(f"planning failed with status {sol.status}")
    return decode_plan(prog, sol.x)


def objective_regret(prog_true: StandardFormProgram, c_hat, cfg: SolverConfig | None = None,
                     reference=None) -> float:
    """``c'(x*(c_hat) - x*(c))`` with both minimizers over the same feasible set.

    ``reference`` may carry an already computed optimal Solution for ``c``.
    """
    c_hat = np.asarray(c_hat, dtype=float)
    if c_hat.shape != prog_true.c.shape:
        raise ValueError(f"c_hat has shape {c_hat.shape}, expected {prog_true.c.shape}")
    ref = reference if reference is not None else branch_and_bound(prog_true, cfg)
    if ref.status != OPTIMAL:
        raise RegretUndefinedError(f"solve under true costs failed with status {ref.status}")
    hat = branch_and_bound(prog_true.with_cost(c_hat), cfg)
    if hat.status != OPTIMAL:
        raise RegretUndefinedError(f"solve under predicted costs failed with status {hat.status}")
    return float(prog_true.c @ (hat.x - ref.x))


def simulate_inventory(q, d, initial):
    """Customer inventory ``s_t = s_{t-1} + q_t - d_t`` without any flooring."""
    return np.asarray(initial, dtype=float)[:, None] + np.cumsum(np.asarray(q) - np.asarray(d), axis=1)


def realized_cost(plan: PlanOutcome, d_true, inst: IrpInstance, penalties: Penalties | None = None) -> float:
    """Cost of executing ``plan`` when the demand turns out to be ``d_true``.

    Deliveries and routes are fixed.  A stock-out is charged at the shortage
    rate and the inventory restarts from zero; stock above capacity is
    charged at the overflow rate and discarded.
    """
    d_true = np.asarray(d_true, dtype=float)
    n, t = inst.n_customers, inst.horizon
    if d_true.shape != (n, t) or plan.q.shape != (n, t) or plan.z.shape != (inst.n_routes, t):
        raise ValueError("plan and demand dimensions do not match the instance")
    pen = penalties or default_penalties(inst)
    M = inst.capacity_customer
    level = inst.initial_inventory.astype(float)
    penalty = holding = 0.0
    for tt in range(t):
        level = level + plan.q[:, tt] - d_true[:, tt]
        short = np.maximum(0.0, -level)
        penalty += pen.shortage * short.sum()
        level = level + short
        over = np.maximum(0.0, level - M)
        penalty += pen.overflow * over.sum()
        level = level - over
        holding += float(inst.holding_customer @ level)
    supplier = inst.supplier_initial + np.cumsum(inst.production_per_period - plan.q.sum(axis=0))
    holding += inst.holding_supplier * float(supplier.sum())
    routing = float(inst.route_costs() @ plan.z.sum(axis=1))
    return float(holding + routing + penalty)


def realized_regret(d_hat, d_true, inst: IrpInstance, cfg: SolverConfig | None = None,
                    penalties: Penalties | None = None, reference: float | None = None) -> float:
    """Realized cost of the plan made for ``d_hat`` minus the optimum for ``d_true``.

    ``reference`` may carry the already known optimum under ``d_true``.
    """
    d_hat = np.asarray(d_hat, dtype=float)
    d_true = np.asarray(d_true, dtype=float)
    if d_hat.shape != d_true.shape:
        raise ValueError(f"forecast shape {d_hat.shape} differs from demand shape {d_true.shape}")
    if reference is None:
        reference = plan_for(inst, d_true, cfg).planned_objective
    plan = plan_for(inst, d_hat, cfg)
    return realized_cost(plan, d_true, inst, penalties) - float(reference)


# -- reports -------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _to_csv(columns, rows, header=None):
    buf = io.StringIO()
    if header:
        buf.write(header.rstrip("\n") + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


@dataclass
class RegretReport:
    """Rows of ``(epsilon, trial, mse, objective_regret, realized_regret)``."""

    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def column(self, name):
        return np.array([r[SWEEP_COLUMNS.index(name)] for r in self.rows], dtype=float)

    def mean_by_epsilon(self, name="realized_regret"):
        eps = self.column("epsilon")
        vals = self.column(name)
        grid = np.unique(eps)
        return grid, np.array([vals[eps == e].mean() for e in grid])

    def trend(self, name="realized_regret") -> float:
        """Spearman rank correlation between epsilon and the mean of ``name``."""
        grid, means = self.mean_by_epsilon(name)
        return float(spearmanr(grid, means).statistic)

    def to_csv(self, header=None) -> str:
        return _to_csv(SWEEP_COLUMNS, self.rows, header)


@dataclass
class TrainingReport:
    """Rows of ``(epoch, train_loss, val_mse, val_realized_regret)``; epoch 0 is before training."""

    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def column(self, name):
        return np.array([r[TRAIN_COLUMNS.index(name)] for r in self.rows], dtype=float)

    def to_csv(self, header=None) -> str:
        return _to_csv(TRAIN_COLUMNS, self.rows, header)


# -- losses --------------------------------------------------------------------


def mse(d_hat, d_true) -> float:
    return float(np.mean((np.asarray(d_hat, dtype=float) - np.asarray(d_true, dtype=float)) ** 2))


def _relaxation(inst, d_hat, cfg, scale=1.0):
    if cfg.diff_method == "kkt_qp":
        return build_standard_form(inst, d_hat, "regularized", lam=cfg.lam * scale)
    return build_standard_form(inst, d_hat, "barrier", mu=cfg.mu * scale)


def task_loss(prog: StandardFormProgram, x, inst: IrpInstance, d_true, cfg: TrainConfig):
    """Decision loss of a relaxed plan and its gradient w.r.t. ``x``.

    The loss is the linear plan cost ``c'x``.  With ``shortage_aware_loss``
    it also charges ``p_short * softplus(-s)`` on the inventory that the
    planned deliveries would leave under the true demand.
    """
    loss = float(prog.c @ x)
    grad = prog.c.copy()
    if cfg.shortage_aware_loss:
        lay = prog.layout
        q = lay.block(x, "q")
        level = simulate_inventory(q, d_true, inst.initial_inventory)
        p_short = cfg.penalties(inst).shortage
        loss += p_short * float(np.logaddexp(0.0, -level).sum())
        # a delivery in period tau lifts every later inventory level
        weight = -p_short * expit(-level)
        dq = np.cumsum(weight[:, ::-1], axis=1)[:, ::-1]
        grad[lay["q"]] += dq.ravel()
    return loss, grad


@dataclass
class PipelineResult:
    loss: float
    grad: np.ndarray | None
    d_hat: np.ndarray
    scale: float


def dfl_loss(model: pr.DemandModel, inst: IrpInstance, features, cfg: TrainConfig, with_grad=True):
    """Forecast, relax, solve, score; optionally back-propagate to the parameters.

    On degenerate complementarity the relaxation weight is raised tenfold
    once.  Raises :class:`DegenerateKKTError` if that also fails and
    :class:`RegretUndefinedError` if the relaxation is not solved.
    """
    d_hat = pr.forward(model, features)
    scales = (1.0, 10.0) if with_grad else (1.0,)
    for scale in scales:
        prog = _relaxation(inst, d_hat, cfg, scale)
        sol = solve_relaxation(prog, cfg.solver)
        if sol.status != OPTIMAL:
            raise RegretUndefinedError(f"relaxation ended with status {sol.status}")
        loss, dL_dx = task_loss(prog, sol.x, inst, inst.demand, cfg)
        if not with_grad:
            return PipelineResult(loss, None, d_hat, scale)
        try:
            grad = differentiate(prog, sol, dL_dx)
        except DegenerateKKTError:
            if scale == scales[-1]:
                raise
            continue
        dL_dd = demand_gradient(prog, grad)
        theta_grad = pr.flat_grad(pr.backward(model, features, dL_dd))
        return PipelineResult(loss, theta_grad, d_hat, scale)
    raise AssertionError("unreachable")


def _mse_grad(model, features, d_true):
    d_hat = pr.forward(model, features)
    r = d_hat - d_true
    return float(np.mean(r**2)), pr.flat_grad(pr.backward(model, features, 2.0 * r / r.size))


# -- training loops --------------------------------------------------------------


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    val_mse: float
    val_realized_regret: float
    skipped: list
    opt_state: pr.AdamState


def default_model(data: pr.Dataset, cfg: TrainConfig) -> pr.DemandModel:
    n_features = data.records[0].features.shape[-1]
    return pr.init_model((n_features, *cfg.hidden, 1), cfg.activation, cfg.seed)


def regrets_by_instance(model, records, cfg: TrainConfig) -> dict:
    """Realized regret per instance id; ``None`` where the forecast cannot be planned."""
    out = {}
    for rec in records:
        d_hat = pr.forward(model, rec.features)
        try:
            out[rec.instance_id] = realized_regret(d_hat, rec.demand, rec.instance, cfg.solver,
                                                   cfg.penalties(rec.instance), _reference(rec, cfg))
        except RegretUndefinedError:
            out[rec.instance_id] = None
    return out


def evaluate(model, records, cfg: TrainConfig, regret=True):
    """Mean MSE and mean realized regret over ``records``; infeasible plans are skipped."""
    if not records:
        return math.nan, math.nan, []
    errs = [mse(pr.forward(model, rec.features), rec.demand) for rec in records]
    if not regret:
        return float(np.mean(errs)), math.nan, []
    per = regrets_by_instance(model, records, cfg)
    regrets = [v for v in per.values() if v is not None]
    skipped = [(i, "forecast cannot be planned") for i, v in per.items() if v is None]
    mean_regret = float(np.mean(regrets)) if regrets else math.nan
    return float(np.mean(errs)), mean_regret, skipped


_REFERENCE_CACHE: dict = {}


def _reference(rec, cfg):
    key = (id(rec.instance), cfg.solver)
    if key not in _REFERENCE_CACHE:
        _REFERENCE_CACHE[key] = (rec.instance, plan_for(rec.instance, rec.demand, cfg.solver).planned_objective)
    return _REFERENCE_CACHE[key][1]


def _epoch(model, data, cfg, opt_state, epoch, step):
    train = data.split("train")
    if not train:
        raise ValueError("training split is empty")
    if opt_state is None:
        opt_state = pr.AdamState.fresh(model.n_params)
    order = np.random.default_rng([cfg.seed, epoch]).permutation(len(train))
    theta = pr.get_params(model)
    losses, skipped = [], []
    for idx in order:
        rec = train[idx]
        current = pr.set_params(model, theta)
        try:
            loss, grad = step(current, rec)
        except (DegenerateKKTError, RegretUndefinedError) as exc:
            skipped.append((rec.instance_id, str(exc)))
            log.warning("epoch %d: skipped instance %d (%s)", epoch, rec.instance_id, exc)
            continue
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite training loss in epoch {epoch}")
        losses.append(loss)
        theta, opt_state = pr.adam_step(theta, grad, opt_state, cfg.lr)
    model = pr.set_params(model, theta)
    with_regret = epoch % cfg.eval_every == 0 or epoch == cfg.epochs
    val_mse, val_regret, val_skipped = evaluate(model, data.split("val"), cfg, with_regret)
    train_loss = float(np.mean(losses)) if losses else math.nan
    return model, EpochMetrics(epoch, train_loss, val_mse, val_regret, skipped + val_skipped, opt_state)


def train_dfl_epoch(model, data: pr.Dataset, cfg: TrainConfig, opt_state=None, epoch=1):
    """One pass of decision-focused updates, one Adam step per training instance."""
    if cfg.mode != "dfl":
        raise ValueError("train_dfl_epoch needs cfg.mode == 'dfl'")

    def step(current, rec):
        res = dfl_loss(current, rec.instance, rec.features, cfg)
        return res.loss, res.grad

    return _epoch(model, data, cfg, opt_state, epoch, step)


def _train(data, cfg, model, step):
    model = model.copy() if model is not None else default_model(data, cfg)
    report = TrainingReport()
    val_mse, val_regret, skipped = evaluate(model, data.split("val"), cfg)
    report.rows.append((0, math.nan, val_mse, val_regret))
    report.skipped.extend(skipped)
    opt_state = None
    for epoch in range(1, cfg.epochs + 1):
        model, m = _epoch(model, data, cfg, opt_state, epoch, step)
        opt_state = m.opt_state
        report.rows.append((epoch, m.train_loss, m.val_mse, m.val_realized_regret))
        report.skipped.extend((epoch, *s) for s in m.skipped)
    return model, report


def train_two_stage(data: pr.Dataset, cfg: TrainConfig, model=None):
    """Fit the forecaster to squared error, one Adam step per training instance."""
    return _train(data, replace(cfg, mode="two_stage"), model,
                  lambda current, rec: _mse_grad(current, rec.features, rec.demand))


def train_dfl(data: pr.Dataset, cfg: TrainConfig, model=None):
    """Decision-focused training; ``model`` (for example a two-stage fit) is the warm start."""
    cfg = replace(cfg, mode="dfl")

    def step(current, rec):
        res = dfl_loss(current, rec.instance, rec.features, cfg)
        return res.loss, res.grad

    return _train(data, cfg, model, step)


def train(data: pr.Dataset, cfg: TrainConfig, model=None):
    return train_dfl(data, cfg, model) if cfg.mode == "dfl" else train_two_stage(data, cfg, model)


# -- regret vs error sweep ---------------------------------------------------------


def sweep_regret_vs_error(inst_count, eps_grid, trials, seed, template=(3, 2, 4),
                          cfg: SolverConfig | None = None, penalties=None) -> RegretReport:
    """Regret of planning with corrupted data as a function of the corruption level.

    For instance ``j`` and repeat ``r`` (trial id ``j * trials + r``) a fixed
    pair of standard normal draws ``eta`` (demand) and ``xi`` (route costs) is
    scaled by each epsilon: ``d_hat = max(d + eps * eta * d, 0)`` and route
    costs ``c_k (1 + eps * xi)``.  Infeasible plans are skipped and listed in
    ``report.skipped``.
    """
    eps_grid = [float(e) for e in eps_grid]
    if not eps_grid or min(eps_grid) < 0:
        raise ValueError("eps_grid must be nonempty with nonnegative values")
    if inst_count < 1 or trials < 1:
        raise ValueError("inst_count and trials must be >= 1")
    n, t, k = template
    rng = np.random.default_rng(seed)
    inst_seeds = rng.integers(0, 2**31 - 1, size=inst_count)
    report = RegretReport()
    for j, s in enumerate(inst_seeds):
        inst, _, _ = _generate(n, t, k, int(s))
        pen = penalties or default_penalties(inst)
        prog = build_standard_form(inst)
        ref = branch_and_bound(prog, cfg)
        if ref.status != OPTIMAL:
            for r in range(trials):
                report.skipped.append((math.nan, j * trials + r, f"true problem {ref.status}"))
            continue
        d = np.asarray(inst.demand)
        z_block = prog.layout["z"]
        for r in range(trials):
            trial = j * trials + r
            eta = rng.normal(size=d.shape)
            xi = rng.normal(size=z_block.stop - z_block.start)
            for eps in eps_grid:
                d_hat = np.maximum(d + eps * eta * d, 0.0)
                c_hat = prog.c.copy()
                c_hat[z_block] *= 1.0 + eps * xi
                try:
                    if eps == 0.0:
                        obj_reg, real_reg = 0.0, realized_cost(decode_plan(prog, ref.x), d, inst, pen) - ref.objective
                    else:
                        obj_reg = objective_regret(prog, c_hat, cfg, reference=ref)
                        real_reg = realized_regret(d_hat, d, inst, cfg, pen, reference=ref.objective)
                except RegretUndefinedError as exc:
                    report.skipped.append((eps, trial, str(exc)))
                    continue
                report.rows.append((eps, trial, mse(d_hat, d), obj_reg, real_reg))
    return report
