"""Feedforward demand model, Adam, and the synthetic feature/demand dataset.

The model maps one feature vector per (customer, period) to a nonnegative
demand forecast.  Gradients are hand-written reverse mode; nothing here
depends on an autodiff library.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .instance import IrpInstance, _generate, fit_to_demand, instance_from_dict, _to_dict

MAGIC = "IRPDFL-MLP v1"
ACTIVATIONS = ("tanh", "relu")
OUTPUTS = ("softplus", "identity")
DEMAND_SCALE = 10.0
SPLITS = ("train", "val", "test")
N_BASE_FEATURES = 9


def feature_dim(n_customers: int) -> int:
    """7 weekday indicators, N customer indicators, previous demand, noise."""
    return N_BASE_FEATURES + n_customers


@dataclass
class DemandModel:
    """Multilayer perceptron with one scalar output.

    ``weights[l]`` has shape ``(dims[l], dims[l + 1])``.  Hidden layers use
    ``activation``; the output goes through softplus so forecasts are never
    negative.  ``output="identity"`` drops the softplus (linear test mode).
    """

    dims: tuple
    weights: list
    biases: list
    activation: str = "tanh"
    output: str = "softplus"

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) < 2 or self.dims[-1] != 1 or min(self.dims) < 1:
            raise ValueError(f"layer dims must be (F, ..., 1) with positive widths, got {self.dims}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.output not in OUTPUTS:
            raise ValueError(f"output must be one of {OUTPUTS}, got {self.output!r}")
        self.weights = [np.array(w, dtype=float) for w in self.weights]
        self.biases = [np.array(b, dtype=float) for b in self.biases]
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.dims[l], self.dims[l + 1]) or b.shape != (self.dims[l + 1],):
                raise ValueError(f"layer {l} has weight {w.shape} and bias {b.shape}, dims are {self.dims}")
        if len(self.weights) != len(self.dims) - 1:
            raise ValueError("need one weight matrix per layer")

    @property
    def n_inputs(self):
        return self.dims[0]

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self):
        return DemandModel(self.dims, [w.copy() for w in self.weights], [b.copy() for b in self.biases],
                           self.activation, self.output)


def init_model(dims, activation="tanh", seed=0, output="softplus") -> DemandModel:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DemandModel(tuple(dims), weights, biases, activation, output)


def get_params(model: DemandModel) -> np.ndarray:
    """Flatten parameters layer by layer, weights (row-major) before biases."""
    return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(model.weights, model.biases)])


def set_params(model: DemandModel, theta) -> DemandModel:
    """A new model with the flat parameter vector ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.n_params,):
        raise ValueError(f"expected {model.n_params} parameters, got shape {theta.shape}")
    weights, biases, pos = [], [], 0
    for w, b in zip(model.weights, model.biases):
        weights.append(theta[pos : pos + w.size].reshape(w.shape))
        pos += w.size
        biases.append(theta[pos : pos + b.size].copy())
        pos += b.size
    return DemandModel(model.dims, weights, biases, model.activation, model.output)


def _softplus(z):
    return np.logaddexp(0.0, z)


def _hidden(z, activation):
    return np.tanh(z) if activation == "tanh" else np.maximum(z, 0.0)


def _hidden_grad(z, a, activation):
    if activation == "tanh":
        return 1.0 - a**2
    return (z > 0).astype(float)


def _as_rows(model, features):
    X = np.asarray(features, dtype=float)
    if X.ndim < 1 or X.shape[-1] != model.n_inputs:
        raise ValueError(f"feature dimension {X.shape[-1:]} does not match model input {model.n_inputs}")
    return X.reshape(-1, model.n_inputs), X.shape[:-1]


def _forward_cache(model, X):
    acts, pre = [X], []
    n_layers = len(model.weights)
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = acts[-1] @ w + b
        pre.append(z)
        if l < n_layers - 1:
            acts.append(_hidden(z, model.activation))
        else:
            acts.append(_softplus(z) if model.output == "softplus" else z)
    return acts, pre


def forward(model: DemandModel, features) -> np.ndarray:
    """Forecasts for features of shape ``(..., F)``; the result has shape ``(...)``.

    For an instance pass the ``(N, T, F)`` feature tensor to get an N x T
    demand matrix.
    """
    X, lead = _as_rows(model, features)
    acts, _ = _forward_cache(model, X)
    return acts[-1][:, 0].reshape(lead)


def backward(model: DemandModel, features, dL_dpred):
    """Reverse-mode gradient of ``L`` w.r.t. every weight and bias.

    Parameters
    ----------
    dL_dpred : array with the same shape as ``forward(model, features)``.

    Returns
    -------
    list of ``(dW, db)`` pairs, one per layer.
    """
    X, lead = _as_rows(model, features)
    g = np.asarray(dL_dpred, dtype=float)
    if g.shape != lead:
        raise ValueError(f"adjoint has shape {g.shape}, predictions have shape {lead}")
    acts, pre = _forward_cache(model, X)
    delta = g.reshape(-1, 1)
    if model.output == "softplus":
        delta = delta * expit(pre[-1])
    grads = []
    for l in range(len(model.weights) - 1, -1, -1):
        grads.append((acts[l].T @ delta, delta.sum(axis=0)))
        if l > 0:
            delta = (delta @ model.weights[l].T) * _hidden_grad(pre[l - 1], acts[l], model.activation)
    return grads[::-1]


def flat_grad(grads) -> np.ndarray:
    """Flatten the output of :func:`backward` in :func:`get_params` order."""
    return np.concatenate([np.concatenate([dw.ravel(), db]) for dw, db in grads])


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def fresh(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params, grads, state: AdamState, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update with bias correction.  Returns ``(params, state)``; inputs are untouched."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise ValueError(f"shape mismatch: params {params.shape}, grads {grads.shape}, state {state.m.shape}")
    if not lr >= 0:
        raise ValueError(f"learning rate must be nonnegative, got {lr}")
    if not np.all(np.isfinite(grads)):
        bad = int(np.flatnonzero(~np.isfinite(grads))[0])
        raise FloatingPointError(f"non-finite gradient at parameter {bad}")
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * grads
    v = beta2 * state.v + (1 - beta2) * grads**2
    m_hat = m / (1 - beta1**t)
    v_hat = v / (1 - beta2**t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps), AdamState(m, v, t)


# -- model files ---------------------------------------------------------------


def save_model(model: DemandModel, path) -> None:
    lines = [MAGIC, " ".join(str(d) for d in model.dims)]
    for w, b in zip(model.weights, model.biases):
        lines.append(" ".join(repr(float(v)) for v in np.concatenate([w.ravel(), b])))
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path, activation="tanh", output="softplus") -> DemandModel:
    """Read a model file.  The file holds no activation, so it is passed in."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise ValueError(f"{path}: not a model file (missing {MAGIC!r} header)")
    try:
        dims = [int(v) for v in lines[1].split()]
        rows = [np.array([float(v) for v in line.split()]) for line in lines[2 : 2 + len(dims) - 1]]
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed model file ({exc})") from exc
    if len(rows) != len(dims) - 1:
        raise ValueError(f"{path}: expected {len(dims) - 1} layer lines, found {len(rows)}")
    weights, biases = [], []
    for l, row in enumerate(rows):
        n_w = dims[l] * dims[l + 1]
        if row.size != n_w + dims[l + 1]:
            raise ValueError(f"{path}: layer {l} has {row.size} values, expected {n_w + dims[l + 1]}")
        weights.append(row[:n_w].reshape(dims[l], dims[l + 1]))
        biases.append(row[n_w:])
    return DemandModel(tuple(dims), weights, biases, activation, output)


# -- features and data ---------------------------------------------------------


def make_features(n_customers, horizon, previous, noise, start_day=1) -> np.ndarray:
    """Feature tensor of shape ``(N, T, 9 + N)``.

    ``previous[i, t]`` is the demand observed in the period before ``t``;
    it is divided by :data:`DEMAND_SCALE`.
    """
    previous = np.asarray(previous, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if previous.shape != (n_customers, horizon) or noise.shape != (n_customers, horizon):
        raise ValueError("previous and noise must both be N x T")
    X = np.zeros((n_customers, horizon, feature_dim(n_customers)))
    days = np.arange(start_day, start_day + horizon)
    X[:, np.arange(horizon), days % 7] = 1.0
    X[np.arange(n_customers), :, 7 + np.arange(n_customers)] = 1.0
    X[:, :, 7 + n_customers] = previous / DEMAND_SCALE
    X[:, :, 8 + n_customers] = noise
    return X


def linear_weekday_effect(day):
    """Additive weekday term of the linear synthetic target."""
    return 1.0 + 0.5 * np.sin(2.0 * np.pi * (np.asarray(day) % 7) / 7.0)


@dataclass
class Record:
    """One instance with its features, true demand and split tag."""

    instance_id: int
    instance: IrpInstance
    features: np.ndarray
    split: str

    @property
    def demand(self):
        return self.instance.demand


@dataclass
class Dataset:
    records: list
    target: str = "seasonal"
    seed: int = 0
    template: tuple = field(default=(2, 3, 3))

    def split(self, name):
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return [r for r in self.records if r.split == name]


def _split_sizes(n):
    n_train = max(1, int(round(0.6 * n)))
    n_val = min(n - n_train, int(round(0.2 * n)))
    return n_train, n_val, n - n_train - n_val


def synthesize_dataset(n_instances, template=(2, 3, 3), seed=0, target="seasonal") -> Dataset:
    """Draw ``n_instances`` instances with per-(customer, period) features.

    ``template`` is ``(n, t, k)`` for :func:`instance.generate_instance`.
    ``target="seasonal"`` keeps the generator's multiplicative demand
    ``base * seasonal + noise`` (a linear model cannot represent it).
    ``target="linear"`` replaces it by ``0.8 d_{t-1} + weekday effect``,
    which is exactly linear in the features.  Splits are 60/20/20 in order.
    """
    n_instances = int(n_instances)
    if n_instances < 1:
        raise ValueError(f"n_instances must be >= 1, got {n_instances}")
    if target not in ("seasonal", "linear"):
        raise ValueError(f"target must be 'seasonal' or 'linear', got {target!r}")
    n, t, k = (int(v) for v in template)
    rng = np.random.default_rng(seed)
    inst_seeds = rng.integers(0, 2**31 - 1, size=n_instances)
    sizes = _split_sizes(n_instances)
    tags = [name for name, size in zip(SPLITS, sizes) for _ in range(size)]
    records = []
    for idx, s in enumerate(inst_seeds):
        inst, history, base = _generate(n, t, k, int(s), lead_in=1)
        demand = np.asarray(inst.demand)
        if target == "linear":
            demand = np.empty((n, t))
            prev_col = history[:, 0]
            for tt in range(t):
                demand[:, tt] = np.maximum(0.8 * prev_col + linear_weekday_effect(tt + 1), 0.0)
                prev_col = demand[:, tt]
            inst = fit_to_demand(inst, demand, base)
        previous = np.hstack([history, demand[:, :-1]])
        noise = rng.normal(size=(n, t))
        records.append(Record(idx, inst, make_features(n, t, previous, noise), tags[idx]))
    return Dataset(records, target, seed, (n, t, k))


def tiny_features(inst: IrpInstance, previous=None) -> np.ndarray:
    """Deterministic features for a fixed instance (zero noise feature).

    Without ``previous`` the first period sees the first-period demand as its
    lag, later periods see the true previous demand.
    """
    d = np.asarray(inst.demand, dtype=float)
    if previous is None:
        previous = np.hstack([d[:, :1], d[:, :-1]])
    return make_features(inst.n_customers, inst.horizon, previous, np.zeros_like(d))


def save_dataset(data: Dataset, directory) -> None:
    """Write ``records.json`` under ``directory`` (created if needed)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": "irpdfl-dataset v1",
        "target": data.target,
        "seed": data.seed,
        "template": list(data.template),
        "records": [
            {
                "id": r.instance_id,
                "split": r.split,
                "instance": _to_dict(r.instance),
                "features": r.features.tolist(),
            }
            for r in data.records
        ],
    }
    (directory / "records.json").write_text(json.dumps(payload))


def load_dataset(directory) -> Dataset:
    path = Path(directory) / "records.json"
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: cannot read dataset ({exc})") from exc
    records = [
        Record(int(r["id"]), instance_from_dict(r["instance"]), np.array(r["features"], dtype=float), r["split"])
        for r in payload["records"]
    ]
    return Dataset(records, payload.get("target", "seasonal"), payload.get("seed", 0),
                   tuple(payload.get("template", (0, 0, 0))))
