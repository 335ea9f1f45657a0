import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

from kmissing.errors import BadSettingId
from kmissing.simulate import (
    N_FEATURES,
    SETTINGS,
    SettingSpec,
    generate,
    generate_test,
    true_pi,
    true_pi_matrix,
)


@pytest.mark.parametrize("setting,expected", [(1, 0.635), (2, 0.5), (3, 0.75), (4, 0.75)])
def test_missing_rates(setting, expected):
    ds = generate(SettingSpec(setting, 50_000, seed=11))
    assert 1 - ds.m.mean() == pytest.approx(expected, abs=0.02)


def test_setting1_missing_by_region():
    ds = generate(SettingSpec(1, 50_000, seed=3))
    low = ds.x[:, 0] <= 2
    assert 1 - ds.m[low].mean() == pytest.approx(0.205, abs=0.02)
    assert 1 - ds.m[~low].mean() == pytest.approx(0.762, abs=0.02)


def test_setting2_missing_depends_on_class():
    ds = generate(SettingSpec(2, 50_000, seed=3))
    pos = ds.y_true == 1
    assert 1 - ds.m[pos].mean() < 0.3
    assert 1 - ds.m[~pos].mean() > 0.7


@pytest.mark.parametrize(
    "setting,row",
    [(1, [2.0, 1, 1, 1, 1]), (2, [1.3, 1.3]), (3, [0.0, 2, 2, 2, 2, 2])],
)
def test_true_pi_half(setting, row):
    assert true_pi(setting, np.array(row)) == pytest.approx(0.5, abs=1e-12)


def test_true_pi_setting1_branches():
    assert true_pi(1, np.array([0.0, 0, 0, 0, 0])) == pytest.approx(expit(9.0))
    assert true_pi(1, np.array([4.0, 0, 0, 0, 0])) == pytest.approx(0.5)


@pytest.mark.parametrize("setting", SETTINGS)
def test_shapes_and_layout(setting):
    ds = generate(SettingSpec(setting, 200, seed=1))
    assert ds.x.shape == (200, N_FEATURES[setting])
    assert ds.feature_names == tuple(f"x{j + 1}" for j in range(N_FEATURES[setting]))
    assert np.all(np.isnan(ds.y[ds.m == 0]))
    assert np.array_equal(ds.true_pi, true_pi_matrix(setting, ds.x))


@pytest.mark.parametrize("setting", SETTINGS)
def test_positivity(setting):
    ds = generate(SettingSpec(setting, 20_000, seed=5))
    # analytic infima over the feature support
    inf = {1: expit(-2.0), 2: expit(-7.5), 3: 1 / (1 + 3 ** (4 / 3)), 4: 1 / (1 + 3 ** (4 / 3))}
    assert ds.true_pi.min() >= inf[setting] - 1e-12
    assert ds.true_pi.max() <= 1.0


def test_setting2_labels_and_task():
    ds = generate_test(SettingSpec(2, 100), 500)
    assert set(np.unique(ds.y)) <= {-1.0, 1.0}


@pytest.mark.parametrize("setting", SETTINGS)
def test_deterministic(setting):
    a = generate(SettingSpec(setting, 50, seed=9), replication=3)
    b = generate(SettingSpec(setting, 50, seed=9), replication=3)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.m, b.m)
    assert np.array_equal(a.y_true, b.y_true)
    c = generate(SettingSpec(setting, 50, seed=9), replication=4)
    assert not np.array_equal(a.x, c.x)


def test_test_stream_disjoint_and_fully_observed():
    spec = SettingSpec(1, 100, seed=0)
    train = generate(spec)
    test = generate_test(spec, 100)
    assert np.all(test.m == 1)
    assert not np.any(np.isin(test.x[:, 0], train.x[:, 0]))
    again = generate_test(spec, 100)
    assert np.array_equal(test.y, again.y)


def test_setting1_mean_matches_monte_carlo():
    r = np.random.default_rng(77)
    mc = np.mean(np.exp(4 * r.beta(5, 3, size=1_000_000))) + 8.0
    y = generate_test(SettingSpec(1, 10, seed=2), 200_000).y
    se = y.std() / np.sqrt(y.size)
    assert abs(y.mean() - mc) < 4 * se


def test_setting3_mean_matches_monte_carlo():
    r = np.random.default_rng(78)
    n = 1_000_000
    X = r.uniform(size=(n, 5))
    Z = 3 * np.cos(X[:, 0]) + 2 * r.uniform(size=n)
    h = (10 * np.cos(X[:, 0]) - 15 * X[:, 1] ** 2 + 10 * np.exp(-X[:, 2]) * X[:, 3]
         - 8 * np.sin(X[:, 4]) * np.cos(X[:, 2]) + 20 * X[:, 0] * X[:, 4])
    y = generate_test(SettingSpec(3, 10, seed=2), 200_000).y
    assert abs(y.mean() - (Z + h).mean()) < 4 * y.std() / np.sqrt(y.size)


@given(st.integers(0, 2**31 - 1), st.integers(1, 40), st.sampled_from(SETTINGS))
@settings(max_examples=25, deadline=None)
def test_generate_contract(seed, n, setting):
    ds = generate(SettingSpec(setting, n, seed=seed))
    assert ds.n == n
    assert np.all((ds.true_pi > 0) & (ds.true_pi <= 1))
    assert np.array_equal(np.isnan(ds.y), ds.m == 0)
    assert np.array_equal(ds.y[ds.m == 1], ds.y_true[ds.m == 1])


def test_truth_can_be_dropped():
    ds = generate(SettingSpec(3, 20, include_truth=False))
    assert ds.true_pi is None and ds.y_true is None


@pytest.mark.parametrize("bad", [0, 5, -1])
def test_bad_setting(bad):
    with pytest.raises(BadSettingId):
        generate(SettingSpec(bad, 10))
    with pytest.raises(BadSettingId):
        true_pi_matrix(bad, np.zeros((1, 2)))
