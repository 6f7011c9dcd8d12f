import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irpdfl import predictor as pr
from irpdfl.diffopt import finite_difference_jacobian, relative_error


def _features(rng, n=2, t=3):
    prev = rng.uniform(0, 20, size=(n, t))
    return pr.make_features(n, t, prev, rng.normal(size=(n, t)))


# -- forward -------------------------------------------------------------------


def test_zero_parameters_give_ln2():
    m = pr.init_model((11, 8, 1), seed=0)
    m = pr.set_params(m, np.zeros(m.n_params))
    out = pr.forward(m, _features(np.random.default_rng(0)))
    np.testing.assert_allclose(out, np.log(2.0), rtol=0, atol=1e-15)


def test_identity_output_passes_previous_demand():
    n, t = 2, 3
    F = pr.feature_dim(n)
    w = np.zeros((F, 1))
    w[7 + n, 0] = 1.0
    m = pr.DemandModel((F, 1), [w], [np.zeros(1)], output="identity")
    X = _features(np.random.default_rng(1), n, t)
    np.testing.assert_array_equal(pr.forward(m, X), X[:, :, 7 + n])


def test_forward_deterministic_and_shaped():
    X = _features(np.random.default_rng(2))
    m = pr.init_model((11, 32, 32, 1), seed=5)
    a, b = pr.forward(m, X), pr.forward(m, X)
    assert a.shape == (2, 3)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(pr.get_params(pr.init_model((11, 32, 32, 1), seed=5)), pr.get_params(m))


def test_forward_rejects_wrong_feature_dim():
    m = pr.init_model((11, 1))
    with pytest.raises(ValueError, match="feature dimension"):
        pr.forward(m, np.zeros((2, 3, 10)))


def test_forward_nonnegative_over_many_draws():
    rng = np.random.default_rng(3)
    X = _features(rng).reshape(-1, 11) * 5.0
    m = pr.init_model((11, 8, 1))
    for act in ("tanh", "relu"):
        m.activation = act
        for _ in range(5000):
            theta = rng.normal(scale=rng.uniform(0.1, 30.0), size=m.n_params)
            assert np.all(pr.forward(pr.set_params(m, theta), X) >= 0.0)


def test_model_validation():
    with pytest.raises(ValueError, match="activation"):
        pr.init_model((3, 1), activation="sigmoid")
    with pytest.raises(ValueError, match="layer dims"):
        pr.init_model((3, 2))
    with pytest.raises(ValueError, match="parameters"):
        pr.set_params(pr.init_model((3, 1)), np.zeros(7))


# -- backward ------------------------------------------------------------------


def test_zero_adjoint_gives_zero_gradient():
    X = _features(np.random.default_rng(4))
    m = pr.init_model((11, 8, 1), seed=1)
    np.testing.assert_array_equal(pr.flat_grad(pr.backward(m, X, np.zeros((2, 3)))), 0.0)


def test_perfect_fit_linear_model_has_zero_gradient():
    rng = np.random.default_rng(5)
    X = _features(rng)
    m = pr.DemandModel((11, 1), [rng.normal(size=(11, 1))], [rng.normal(size=1)], output="identity")
    target = pr.forward(m, X)
    g = pr.flat_grad(pr.backward(m, X, 2.0 * (pr.forward(m, X) - target)))
    np.testing.assert_array_equal(g, 0.0)


@pytest.mark.parametrize("activation", ["tanh", "relu"])
@pytest.mark.parametrize("hidden", [(), (8,), (32, 32)])
def test_backward_matches_finite_differences(hidden, activation):
    rng = np.random.default_rng(len(hidden) * 10 + (activation == "relu"))
    X = _features(rng)
    m = pr.init_model((11, *hidden, 1), activation, seed=7)
    m = pr.set_params(m, pr.get_params(m) + 0.1 * rng.normal(size=m.n_params))
    adj = rng.normal(size=(2, 3))
    analytic = pr.flat_grad(pr.backward(m, X, adj))
    fd = finite_difference_jacobian(lambda th: adj.ravel() @ pr.forward(pr.set_params(m, th), X).ravel(),
                                    pr.get_params(m), h=1e-6)[0]
    assert relative_error(analytic, fd) <= 1e-5


def test_backward_rejects_bad_adjoint():
    m = pr.init_model((11, 1))
    with pytest.raises(ValueError, match="adjoint"):
        pr.backward(m, np.zeros((2, 3, 11)), np.zeros((3, 2)))


# -- adam ----------------------------------------------------------------------


def test_adam_zero_gradient_keeps_params():
    p = np.array([1.0, -2.0, 3.0])
    new, state = pr.adam_step(p, np.zeros(3), pr.AdamState.fresh(3), lr=0.1)
    np.testing.assert_array_equal(new, p)
    assert state.t == 1


@given(st.lists(st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-3), min_size=1, max_size=6),
       st.floats(1e-4, 1.0))
@settings(max_examples=50, deadline=None)
def test_adam_first_step_is_signed_lr(g, lr):
    g = np.array(g)
    p = np.zeros_like(g)
    new, _ = pr.adam_step(p, g, pr.AdamState.fresh(g.size), lr=lr)
    np.testing.assert_allclose(new, -lr * np.sign(g), rtol=1e-4)


def test_adam_deterministic_and_pure():
    rng = np.random.default_rng(6)
    p, g = rng.normal(size=5), rng.normal(size=5)
    s = pr.AdamState(rng.normal(size=5) ** 2, rng.normal(size=5) ** 2, 3)
    p_copy = p.copy()
    a, sa = pr.adam_step(p, g, s, 0.01)
    b, sb = pr.adam_step(p, g, s, 0.01)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(sa.v, sb.v)
    np.testing.assert_array_equal(p, p_copy)
    assert s.t == 3


def test_adam_rejects_nonfinite_gradient():
    with pytest.raises(FloatingPointError, match="parameter 1"):
        pr.adam_step(np.zeros(3), np.array([0.0, np.nan, 1.0]), pr.AdamState.fresh(3), 0.1)
    with pytest.raises(ValueError):
        pr.adam_step(np.zeros(3), np.zeros(3), pr.AdamState.fresh(3), -1.0)


# -- dataset -------------------------------------------------------------------


@pytest.mark.parametrize("target", ["seasonal", "linear"])
def test_dataset_deterministic_and_consistent(target):
    a = pr.synthesize_dataset(6, (2, 3, 3), seed=4, target=target)
    b = pr.synthesize_dataset(6, (2, 3, 3), seed=4, target=target)
    assert [r.split for r in a.records] == ["train"] * 4 + ["val", "test"]
    for ra, rb in zip(a.records, b.records):
        np.testing.assert_array_equal(ra.features, rb.features)
        np.testing.assert_array_equal(ra.demand, rb.demand)
        d = np.asarray(ra.demand)
        assert np.all(d >= 0)
        n, t = d.shape
        assert ra.features.shape == (n, t, pr.feature_dim(n))
        np.testing.assert_array_equal(ra.features[..., :7].sum(axis=-1), 1.0)
        np.testing.assert_array_equal(ra.features[..., 7 : 7 + n].sum(axis=-1), 1.0)


def test_linear_target_follows_recursion():
    data = pr.synthesize_dataset(3, (2, 4, 3), seed=1, target="linear")
    for r in data.records:
        d = np.asarray(r.demand)
        prev = r.features[:, :, 9] * pr.DEMAND_SCALE
        days = np.arange(1, 5)
        np.testing.assert_allclose(d, 0.8 * prev + pr.linear_weekday_effect(days), atol=1e-12)
        np.testing.assert_allclose(prev[:, 1:], d[:, :-1], atol=1e-12)


def test_dataset_validation():
    with pytest.raises(ValueError):
        pr.synthesize_dataset(0)
    with pytest.raises(ValueError):
        pr.synthesize_dataset(2, target="cubic")
    with pytest.raises(ValueError):
        pr.synthesize_dataset(2, template=(0, 2, 3))


def test_dataset_roundtrip(tmp_path):
    data = pr.synthesize_dataset(3, seed=2)
    pr.save_dataset(data, tmp_path / "d")
    back = pr.load_dataset(tmp_path / "d")
    assert back.template == data.template and back.seed == data.seed
    for ra, rb in zip(data.records, back.records):
        assert ra.split == rb.split and ra.instance_id == rb.instance_id
        np.testing.assert_array_equal(ra.features, rb.features)
        np.testing.assert_array_equal(ra.demand, rb.demand)


# -- model files ---------------------------------------------------------------


def test_model_file_roundtrip(tmp_path):
    m = pr.init_model((11, 8, 1), "relu", seed=9)
    m = pr.set_params(m, pr.get_params(m) + np.random.default_rng(0).normal(size=m.n_params) / 3)
    pr.save_model(m, tmp_path / "m.txt")
    lines = (tmp_path / "m.txt").read_text().splitlines()
    assert lines[0] == "IRPDFL-MLP v1" and lines[1] == "11 8 1" and len(lines) == 4
    back = pr.load_model(tmp_path / "m.txt", activation="relu")
    np.testing.assert_array_equal(pr.get_params(back), pr.get_params(m))


@pytest.mark.parametrize("text, match", [
    ("", "header"),
    ("IRPDFL-MLP v0\n2 1\n1 2 3\n", "header"),
    ("IRPDFL-MLP v1\n2 1\n1 2\n", "layer 0"),
    ("IRPDFL-MLP v1\n2 1\n", "layer lines"),
    ("IRPDFL-MLP v1\n2 x\n", "malformed"),
])
def test_model_file_errors(tmp_path, text, match):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ValueError, match=match):
        pr.load_model(path)
