import json
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irpdfl.instance import (
    UNLIMITED,
    InstanceFormatError,
    InvalidInstanceError,
    Route,
    _to_dict,
    generate_instance,
    instance_from_dict,
    read_instance,
    seasonal_factor,
    validate_instance,
    write_instance,
)

KEYS = {
    "n_customers", "horizon", "vehicle_capacity", "production_per_period", "supplier_initial",
    "holding_supplier", "holding_customer", "capacity_customer", "initial_inventory",
    "max_visits_per_day", "routes", "demand",
}


def test_tiny_fields(tiny):
    assert (tiny.n_customers, tiny.horizon) == (2, 2)
    assert (tiny.vehicle_capacity, tiny.production_per_period, tiny.supplier_initial) == (20, 15, 10)
    assert tiny.holding_supplier == 0.1
    np.testing.assert_array_equal(tiny.holding_customer, [0.2, 0.2])
    np.testing.assert_array_equal(tiny.capacity_customer, [10, 10])
    np.testing.assert_array_equal(tiny.initial_inventory, [0, 0])
    assert [(r.visits, r.cost) for r in tiny.routes] == [((0,), 10), ((1,), 12), ((0, 1), 18)]
    np.testing.assert_array_equal(tiny.demand, [[4, 6], [5, 5]])
    assert tiny.max_visits_per_day == UNLIMITED
    np.testing.assert_array_equal(tiny.incidence(), [[1, 0, 1], [0, 1, 1]])


def test_tiny_is_valid(tiny):
    assert validate_instance(tiny) == []


def test_negative_demand_flagged(tiny):
    d = tiny.demand.copy()
    d[0, 1] = -1
    problems = validate_instance(tiny.with_demand(d))
    assert problems == ["demand[0][1]: demand nonnegative"]


def test_uncovered_customer_flagged(tiny):
    inst = replace(tiny, routes=(Route((0,), 10.0),))
    assert any("route coverage" in p and "customer 1" in p for p in validate_instance(inst))


def test_other_invariants_flagged(tiny):
    assert any("initial_inventory[0]" in p for p in validate_instance(replace(tiny, initial_inventory=[11.0, 0.0])))
    assert any("vehicle_capacity" in p for p in validate_instance(replace(tiny, vehicle_capacity=0.0)))
    assert any("routes[0].cost" in p for p in validate_instance(replace(tiny, routes=(Route((0, 1), -1.0),))))
    assert any("max_visits_per_day" in p for p in validate_instance(replace(tiny, max_visits_per_day=0)))


def test_instances_are_immutable(tiny):
    with pytest.raises(ValueError):
        tiny.demand[0, 0] = 3.0


def test_generate_deterministic():
    a = generate_instance(2, 2, 3, 7)
    b = generate_instance(2, 2, 3, 7)
    assert a == b
    np.testing.assert_array_equal(a.demand, b.demand)
    assert generate_instance(2, 2, 3, 8) != a


@pytest.mark.parametrize("args", [(0, 2, 3, 7), (2, 0, 3, 7), (3, 2, 2, 7)])
def test_generate_rejects_bad_parameters(args):
    with pytest.raises(ValueError):
        generate_instance(*args)


def test_generate_valid_for_many_seeds():
    for seed in range(100):
        inst = generate_instance(2, 2, 3, seed)
        assert validate_instance(inst) == []
        assert np.all(inst.demand >= 0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), t=st.integers(1, 5), extra=st.integers(0, 3), seed=st.integers(0, 2**31 - 1))
def test_generated_instances_valid(n, t, extra, seed):
    inst = generate_instance(n, t, n + extra, seed)
    assert validate_instance(inst) == []
    assert inst.n_routes == n + extra
    assert [r.visits for r in inst.routes[:n]] == [(i,) for i in range(n)]
    for r in inst.routes[n:]:
        assert len(r.visits) >= min(2, n)


def test_seasonal_factor_period():
    days = np.arange(14)
    np.testing.assert_allclose(seasonal_factor(days[:7]), seasonal_factor(days[7:]))
    assert seasonal_factor(0) == pytest.approx(1.0)
    assert max(seasonal_factor(days)) <= 1.3 + 1e-12


def test_round_trip(tiny, tmp_path):
    path = tmp_path / "tiny.json"
    write_instance(tiny, path)
    assert read_instance(path) == tiny
    assert set(json.loads(path.read_text())) == KEYS


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), scale=st.floats(1e-3, 1e3))
def test_round_trip_full_precision(seed, scale, tmp_path_factory):
    inst = generate_instance(3, 2, 4, seed)
    inst = inst.with_demand(inst.demand * scale / 3.0)
    inst = replace(inst, capacity_customer=inst.capacity_customer * max(scale, 1.0) + 1.0 / 3.0)
    path = tmp_path_factory.mktemp("rt") / "inst.json"
    write_instance(inst, path)
    back = read_instance(path)
    np.testing.assert_array_equal(back.demand, inst.demand)
    np.testing.assert_array_equal(back.capacity_customer, inst.capacity_customer)
    assert back == inst


def test_missing_field_named(tiny):
    data = _to_dict(tiny)
    del data["vehicle_capacity"]
    with pytest.raises(InstanceFormatError) as err:
        instance_from_dict(data)
    assert err.value.field == "vehicle_capacity"
    assert "vehicle_capacity" in str(err.value)


def test_type_mismatch_named(tiny):
    data = _to_dict(tiny)
    data["horizon"] = "two"
    with pytest.raises(InstanceFormatError, match="horizon"):
        instance_from_dict(data)
    data = _to_dict(tiny)
    data["routes"][1]["visits"] = ["a"]
    with pytest.raises(InstanceFormatError, match=r"routes\[1\]\.visits"):
        instance_from_dict(data)


def test_unknown_field_warns(tiny):
    data = _to_dict(tiny)
    data["comment"] = "hello"
    with pytest.warns(UserWarning, match="comment"):
        inst = instance_from_dict(data)
    assert inst == tiny


def test_unreadable_file_named(tmp_path):
    path = tmp_path / "nope.json"
    with pytest.raises(InstanceFormatError, match="nope.json"):
        read_instance(path)
    path.write_text("{not json")
    with pytest.raises(InstanceFormatError, match="nope.json"):
        read_instance(path)


def test_write_rejects_invalid(tiny, tmp_path):
    d = tiny.demand.copy()
    d[1, 1] = -2
    with pytest.raises(InvalidInstanceError):
        write_instance(tiny.with_demand(d), tmp_path / "bad.json")
    assert not (tmp_path / "bad.json").exists()


def test_route_normalizes_visits():
    assert Route((1, 0, 1), 3.0).visits == (0, 1)
