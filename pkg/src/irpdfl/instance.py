"""Problem data for the inventory routing problem.

An :class:`IrpInstance` bundles customers, horizon, a fixed route catalog,
costs, capacities and the demand matrix.  Instances are immutable; arrays are
stored read-only so an instance can be shared freely.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

UNLIMITED = "unlimited"

_REQUIRED = (
    "n_customers",
    "horizon",
    "vehicle_capacity",
    "production_per_period",
    "supplier_initial",
    "holding_supplier",
    "holding_customer",
    "capacity_customer",
    "initial_inventory",
    "max_visits_per_day",
    "routes",
    "demand",
)


class InstanceFormatError(ValueError):
    """Raised when an instance file is unreadable or malformed."""

    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class InvalidInstanceError(ValueError):
    pass


def _frozen(values, ndim):
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Route:
    """A candidate vehicle route: the customers it serves and its travel cost."""

    visits: tuple
    cost: float

    def __post_init__(self):
        object.__setattr__(self, "visits", tuple(sorted(int(v) for v in set(self.visits))))
        object.__setattr__(self, "cost", float(self.cost))


@dataclass(frozen=True, eq=False)
class IrpInstance:
    n_customers: int
    horizon: int
    routes: tuple
    vehicle_capacity: float
    production_per_period: float
    supplier_initial: float
    holding_supplier: float
    holding_customer: np.ndarray
    capacity_customer: np.ndarray
    initial_inventory: np.ndarray
    demand: np.ndarray
    max_visits_per_day: int | str = UNLIMITED

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "routes", tuple(r if isinstance(r, Route) else Route(**r) for r in self.routes))
        for name in ("holding_customer", "capacity_customer", "initial_inventory"):
            set_(self, name, _frozen(getattr(self, name), 1))
        set_(self, "demand", _frozen(self.demand, 2))
        for name in ("vehicle_capacity", "production_per_period", "supplier_initial", "holding_supplier"):
            set_(self, name, float(getattr(self, name)))

    @property
    def n_routes(self):
        return len(self.routes)

    @property
    def visit_limit(self):
        """Maximum visits per period as an int, or None when unlimited."""
        if self.max_visits_per_day == UNLIMITED:
            return None
        return int(self.max_visits_per_day)

    def incidence(self):
        """N x K matrix with a[i, k] = 1 when route k visits customer i."""
        a = np.zeros((self.n_customers, self.n_routes))
        for k, route in enumerate(self.routes):
            a[list(route.visits), k] = 1.0
        return a

    def route_costs(self):
        return np.array([r.cost for r in self.routes])

    def with_demand(self, demand):
        return replace(self, demand=demand)

    def __eq__(self, other):
        if not isinstance(other, IrpInstance):
            return NotImplemented
        return _to_dict(self) == _to_dict(other)

    def __hash__(self):
        return hash(json.dumps(_to_dict(self), sort_keys=True))


def validate_instance(inst: IrpInstance) -> list[str]:
    """Check every instance invariant.

    Returns a list of violations, each formatted ``"<field path>: <invariant>"``.
    An empty list means the instance is valid.
    """
    out = []
    n, t = inst.n_customers, inst.horizon
    if n < 1:
        out.append("n_customers: count positive")
    if t < 1:
        out.append("horizon: count positive")
    if not inst.vehicle_capacity > 0:
        out.append("vehicle_capacity: capacity positive")
    for name in ("production_per_period", "supplier_initial", "holding_supplier"):
        if not getattr(inst, name) >= 0:
            out.append(f"{name}: value nonnegative")

    for name in ("holding_customer", "capacity_customer", "initial_inventory"):
        arr = getattr(inst, name)
        if arr.shape != (n,):
            out.append(f"{name}: length must equal n_customers ({arr.shape[0]} != {n})")
            continue
        for i, v in enumerate(arr):
            if name == "capacity_customer" and not v > 0:
                out.append(f"{name}[{i}]: capacity positive")
            elif not v >= 0:
                out.append(f"{name}[{i}]: value nonnegative")
    if inst.initial_inventory.shape == inst.capacity_customer.shape == (n,):
        for i in range(n):
            if inst.initial_inventory[i] > inst.capacity_customer[i]:
                out.append(f"initial_inventory[{i}]: initial inventory within capacity")

    if inst.demand.shape != (n, t):
        out.append(f"demand: shape must be ({n}, {t}), got {inst.demand.shape}")
    else:
        for i, j in zip(*np.nonzero(~(inst.demand >= 0))):
            out.append(f"demand[{i}][{j}]: demand nonnegative")

    vmax = inst.max_visits_per_day
    if vmax != UNLIMITED and not (isinstance(vmax, (int, np.integer)) and vmax >= 1):
        out.append("max_visits_per_day: positive integer or 'unlimited'")

    covered = set()
    for k, route in enumerate(inst.routes):
        if not route.visits:
            out.append(f"routes[{k}].visits: visits nonempty")
        bad = [v for v in route.visits if not 0 <= v < n]
        if bad:
            out.append(f"routes[{k}].visits: customer index out of range {bad}")
        if not route.cost >= 0:
            out.append(f"routes[{k}].cost: cost nonnegative")
        covered.update(route.visits)
    for i in range(n):
        if i not in covered:
            out.append(f"routes: route coverage (customer {i} is on no route)")
    return out


def check_instance(inst: IrpInstance) -> None:
    problems = validate_instance(inst)
    if problems:
        raise InvalidInstanceError("invalid instance: " + "; ".join(problems))


# -- synthetic generation ----------------------------------------------------


def _tour_length(points, depot):
    best = math.inf
    for perm in itertools.permutations(range(len(points))):
        stops = [depot] + [points[p] for p in perm] + [depot]
        length = sum(float(np.hypot(*(b - a))) for a, b in zip(stops[:-1], stops[1:]))
        best = min(best, length)
    return best


def seasonal_factor(day):
    """Weekly demand pattern applied to a customer's base level."""
    return 1.0 + 0.3 * np.sin(2.0 * np.pi * np.asarray(day) / 7.0)


def _generate(n, t, k, seed, lead_in=0):
    if n < 1 or t < 1:
        raise ValueError(f"n and t must be >= 1, got n={n}, t={t}")
    if k < n:
        raise ValueError(f"k must be >= n so every customer can be covered, got k={k} < n={n}")
    rng = np.random.default_rng(seed)

    depot = np.array([50.0, 50.0])
    coords = rng.uniform(0.0, 100.0, size=(n, 2))
    routes = [Route((i,), round(_tour_length(coords[[i]], depot), 2)) for i in range(n)]
    for _ in range(k - n):
        if n >= 2:
            size = int(rng.integers(2, min(n, 4) + 1))
            visits = sorted(rng.choice(n, size=size, replace=False).tolist())
            cost = _tour_length(coords[visits], depot)
        else:
            visits = [0]
            cost = _tour_length(coords, depot) * rng.uniform(1.0, 1.5)
        routes.append(Route(tuple(visits), round(cost, 2)))

    base = rng.uniform(2.0, 8.0, size=n)
    days = np.arange(1 - lead_in, t + 1)
    noise = rng.normal(0.0, 1.0, size=(n, days.size)) * 0.1 * base[:, None]
    demand = np.maximum(base[:, None] * seasonal_factor(days)[None, :] + noise, 0.0)
    demand = np.round(demand, 3)
    history, demand = demand[:, :lead_in], demand[:, lead_in:]

    inst = IrpInstance(
        n_customers=n,
        horizon=t,
        routes=tuple(routes),
        vehicle_capacity=1.0,
        production_per_period=1.0,
        supplier_initial=0.0,
        holding_supplier=0.05,
        holding_customer=np.round(rng.uniform(0.1, 0.5, size=n), 3),
        capacity_customer=np.ones(n),
        initial_inventory=np.round(rng.uniform(0.0, 0.5, size=n) * base, 3),
        demand=demand,
        max_visits_per_day=UNLIMITED,
    )
    inst = fit_to_demand(inst, demand, base)
    return inst, history, base


def fit_to_demand(inst: IrpInstance, demand, base) -> IrpInstance:
    """Replace the demand and re-size capacities and supply around it.

    Uses the generator's sizing rules: ``M_i = max(3 base_i, 1.5 max_t d_it)``,
    vehicle capacity 1.5x the peak period total, production 1.1x the mean
    period total and an initial supplier stock of two mean periods.
    """
    demand = np.asarray(demand, dtype=float)
    base = np.asarray(base, dtype=float)
    period_total = demand.sum(axis=0)
    return replace(
        inst,
        demand=demand,
        capacity_customer=np.round(np.maximum(3.0 * base, 1.5 * demand.max(axis=1)), 1),
        vehicle_capacity=float(math.ceil(1.5 * period_total.max())),
        production_per_period=float(math.ceil(1.1 * period_total.mean())),
        supplier_initial=round(2.0 * float(period_total.mean()), 3),
    )


def generate_instance(n: int, t: int, k: int, seed: int) -> IrpInstance:
    """Draw a random valid instance.

    Customers sit uniformly in a 100x100 square around a central depot.  The
    route catalog holds the ``n`` singleton routes plus ``k - n`` random
    multi-customer routes, each costed as its shortest closed tour from the
    depot.  Demand follows ``base_i * (1 + 0.3 sin(2 pi t / 7))`` with
    Gaussian noise, clamped at zero.
    """
    inst, _, _ = _generate(n, t, k, seed)
    return inst


def tiny2x2() -> IrpInstance:
    """The two-customer, two-period reference instance shipped with the package."""
    return read_instance(Path(__file__).with_name("data") / "tiny2x2.json")


# -- serialization -----------------------------------------------------------


def _to_dict(inst):
    vmax = inst.max_visits_per_day
    return {
        "n_customers": int(inst.n_customers),
        "horizon": int(inst.horizon),
        "vehicle_capacity": inst.vehicle_capacity,
        "production_per_period": inst.production_per_period,
        "supplier_initial": inst.supplier_initial,
        "holding_supplier": inst.holding_supplier,
        "holding_customer": inst.holding_customer.tolist(),
        "capacity_customer": inst.capacity_customer.tolist(),
        "initial_inventory": inst.initial_inventory.tolist(),
        "max_visits_per_day": vmax if vmax == UNLIMITED else int(vmax),
        "routes": [{"visits": list(r.visits), "cost": r.cost} for r in inst.routes],
        "demand": inst.demand.tolist(),
    }


def instance_to_json(inst: IrpInstance) -> str:
    return json.dumps(_to_dict(inst), indent=2) + "\n"


def _number(data, key):
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceFormatError(key, f"expected a number, got {type(v).__name__}")
    return v


def _count(data, key):
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise InstanceFormatError(key, f"expected an integer, got {type(v).__name__}")
    return v


def _numbers(values, key):
    if not isinstance(values, list):
        raise InstanceFormatError(key, "expected an array")
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InstanceFormatError(key, f"expected numbers, got {type(v).__name__}")
    return values


def instance_from_dict(data: dict) -> IrpInstance:
    if not isinstance(data, dict):
        raise InstanceFormatError("<root>", "expected a JSON object")
    for key in _REQUIRED:
        if key not in data:
            raise InstanceFormatError(key, "missing required field")
    extra = sorted(set(data) - set(_REQUIRED))
    if extra:
        warnings.warn(f"ignoring unknown instance fields: {', '.join(extra)}", stacklevel=3)

    vmax = data["max_visits_per_day"]
    if vmax != UNLIMITED and (isinstance(vmax, bool) or not isinstance(vmax, int)):
        raise InstanceFormatError("max_visits_per_day", "expected an integer or 'unlimited'")

    routes = data["routes"]
    if not isinstance(routes, list):
        raise InstanceFormatError("routes", "expected an array")
    parsed = []
    for k, r in enumerate(routes):
        if not isinstance(r, dict) or "visits" not in r or "cost" not in r:
            raise InstanceFormatError(f"routes[{k}]", "expected an object with visits and cost")
        visits = r["visits"]
        if not isinstance(visits, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in visits):
            raise InstanceFormatError(f"routes[{k}].visits", "expected an array of integers")
        cost = _number(r, "cost") if not isinstance(r["cost"], bool) else None
        if cost is None:
            raise InstanceFormatError(f"routes[{k}].cost", "expected a number")
        parsed.append(Route(tuple(visits), cost))

    demand = data["demand"]
    if not isinstance(demand, list):
        raise InstanceFormatError("demand", "expected an array of arrays")
    rows = [_numbers(row, "demand") for row in demand]
    if len({len(r) for r in rows}) > 1:
        raise InstanceFormatError("demand", "rows have different lengths")

    return IrpInstance(
        n_customers=_count(data, "n_customers"),
        horizon=_count(data, "horizon"),
        routes=tuple(parsed),
        vehicle_capacity=_number(data, "vehicle_capacity"),
        production_per_period=_number(data, "production_per_period"),
        supplier_initial=_number(data, "supplier_initial"),
        holding_supplier=_number(data, "holding_supplier"),
        holding_customer=_numbers(data["holding_customer"], "holding_customer"),
        capacity_customer=_numbers(data["capacity_customer"], "capacity_customer"),
        initial_inventory=_numbers(data["initial_inventory"], "initial_inventory"),
        demand=np.array(rows, dtype=float).reshape(len(rows), -1),
        max_visits_per_day=vmax,
    )


def read_instance(path) -> IrpInstance:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceFormatError(str(path), f"cannot read file ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(str(path), f"invalid JSON ({exc})") from exc
    return instance_from_dict(data)


def write_instance(inst: IrpInstance, path) -> None:
    check_instance(inst)
    Path(path).write_text(instance_to_json(inst), encoding="utf-8")


def demand_matrix(values, inst: IrpInstance | None = None) -> np.ndarray:
    """Coerce ``values`` into an N x T demand array, checking it against ``inst``."""
    d = np.asarray(values, dtype=float)
    if inst is not None and d.shape != (inst.n_customers, inst.horizon):
        raise ValueError(f"demand shape {d.shape} does not match instance ({inst.n_customers}, {inst.horizon})")
    if d.ndim != 2:
        raise ValueError(f"demand must be a matrix, got shape {d.shape}")
    if np.any(d < 0):
        raise ValueError("demand must be nonnegative")
    return d
