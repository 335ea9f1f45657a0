import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmissing.errors import NotPositiveDefinite, Singular
from kmissing.numerics import solve_general, solve_spd


def test_spd_identity():
    assert np.array_equal(solve_spd(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_spd_two_by_two_cramer():
    # Cramer: det = 4*3 - 2*2 = 8; x1 = (4*3 - 2*5)/8, x2 = (4*5 - 2*4)/8
    x = solve_spd([[4.0, 2.0], [2.0, 3.0]], [4.0, 5.0])
    assert x == pytest.approx([0.25, 1.5], abs=1e-14)


def test_spd_rank_deficient():
    with pytest.raises(NotPositiveDefinite):
        solve_spd([[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])


def test_spd_rejects_asymmetric():
    with pytest.raises(ValueError):
        solve_spd([[2.0, 1.0], [0.0, 2.0]], [1.0, 1.0])


def test_general_identity_and_permutation():
    assert np.array_equal(solve_general(np.eye(2), [7.0, -1.0]), [7.0, -1.0])
    assert solve_general([[0.0, 1.0], [1.0, 0.0]], [2.0, 3.0]) == pytest.approx([3.0, 2.0])


def test_general_singular():
    with pytest.raises(Singular):
        solve_general([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


def _residual_ok(A, x, b):
    return np.max(np.abs(A @ x - b)) <= 1e-8 * (1 + np.max(np.abs(b)))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 40), seed=st.integers(0, 2**32 - 1))
def test_random_spd_residual(n, seed):
    r = np.random.default_rng(seed)
    G = r.normal(size=(n, n))
    A = G.T @ G + np.eye(n)
    b = r.normal(size=n) * 10
    x = solve_spd(A, b)
    assert _residual_ok(A, x, b)
    assert np.max(np.abs(solve_general(A, b) - x)) <= 1e-9 * (1 + np.max(np.abs(x)))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 30), seed=st.integers(0, 2**32 - 1))
def test_random_general_residual(n, seed):
    r = np.random.default_rng(seed)
    A = r.normal(size=(n, n)) + n * np.eye(n)
    b = r.normal(size=n)
    assert _residual_ok(A, solve_general(A, b), b)
