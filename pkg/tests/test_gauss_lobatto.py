import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taylorhood.errors import InvalidOrderError
from taylorhood.gauss_lobatto import (
    MAX_POINTS,
    build_rule,
    centred_gap,
    gauss_legendre_rule,
    integrate_tensor,
    monomial_errors,
    reference_rule,
    tensor_rule,
)


def moment_weights(points):
    """Weights that integrate 1, t, ..., t^(n-1) exactly on given points (Vandermonde solve)."""
    n = len(points)
    V = np.vander(points, n, increasing=True).T
    rhs = 1.0 / np.arange(1, n + 1)
    return np.linalg.solve(V, rhs)


def test_two_points_is_trapezoid():
    r = build_rule(2)
    assert np.array_equal(r.points, [0.0, 1.0])
    np.testing.assert_allclose(r.weights, [0.5, 0.5], atol=1e-15)


def test_three_points_matches_hand_moments():
    # symmetric rule {0, 1/2, 1} with weights (a, b, a): 2a + b = 1 and a + b/4 = 1/3
    b = 2.0 / 3.0
    a = 1.0 / 3.0 - b / 4.0
    r = build_rule(3)
    np.testing.assert_allclose(r.points, [0.0, 0.5, 1.0], atol=1e-15)
    np.testing.assert_allclose(r.weights, [a, b, a], atol=1e-15)
    np.testing.assert_allclose(r.weights, [1 / 6, 2 / 3, 1 / 6], atol=1e-15)


def test_four_points_matches_moment_oracle():
    # interior points: roots of P_3'(s) = (15 s^2 - 3) / 2 on [-1, 1], mapped to [0, 1]
    s = 1.0 / np.sqrt(5.0)
    pts = np.array([0.0, (1 - s) / 2, (1 + s) / 2, 1.0])
    r = build_rule(4)
    np.testing.assert_allclose(r.points, pts, atol=1e-15)
    np.testing.assert_allclose(r.weights, moment_weights(pts), atol=1e-14)
    np.testing.assert_allclose(r.weights, [1 / 12, 5 / 12, 5 / 12, 1 / 12], atol=1e-15)


@pytest.mark.parametrize("n", range(2, MAX_POINTS + 1))
def test_rule_invariants(n):
    r = build_rule(n)
    assert r.order == n
    assert r.points[0] == 0.0 and r.points[-1] == 1.0
    assert np.all(np.diff(r.points) > 0)
    assert np.all(r.weights > 0)
    assert abs(r.weights.sum() - 1.0) <= 1e-14
    assert np.array_equal(r.points + r.points[::-1], np.ones(n))
    assert np.array_equal(r.weights, r.weights[::-1])
    assert r.exactness == 2 * n - 3


@pytest.mark.parametrize("n", range(2, 9))
def test_monomials_exact_up_to_2n_minus_3(n):
    r = build_rule(n)
    for m in range(2 * n - 2):
        assert abs(r.weights @ r.points**m - 1.0 / (m + 1)) <= 1e-12


@pytest.mark.parametrize("n", range(2, 9))
def test_not_exact_at_2n_minus_2(n):
    # t^(2n-2) itself gives a gap of only ~1e-7 at n = 8, so the centred monomial is used
    assert centred_gap(n) > 1e-6


@pytest.mark.parametrize("k", range(2, 7))
def test_raw_monomial_gap_for_taylor_hood_degrees(k):
    errs = monomial_errors(k + 1, 2 * k)
    assert errs[:-1].max() <= 1e-12
    assert errs[-1] > 1e-6


@pytest.mark.parametrize("bad", [0, 1, MAX_POINTS + 1, 2.5])
def test_invalid_orders(bad):
    with pytest.raises(InvalidOrderError):
        build_rule(bad)


def test_rule_arrays_are_read_only():
    r = build_rule(5)
    with pytest.raises(ValueError):
        r.points[0] = 0.1


def test_tensor_rule_counts_and_weights():
    for d in (1, 2, 3):
        t = tensor_rule(4, d)
        assert len(t) == 4**d
        assert t.points.shape == (4**d, d)
        assert abs(t.weights.sum() - 1.0) <= 1e-14


def test_tensor_weight_is_product_of_axis_weights():
    r = build_rule(3)
    t = tensor_rule(3, 3)
    for (i, j, l), w in zip(t.indices, t.weights):
        assert w == pytest.approx(r.weights[i] * r.weights[j] * r.weights[l], abs=1e-16)


def test_integrate_constant():
    assert integrate_tensor(lambda x: np.ones(len(x)), tensor_rule(5, 2)) == pytest.approx(1.0, abs=1e-15)


def test_integrate_cubic_product():
    f = lambda x: x[:, 0] ** 3 * x[:, 1] ** 3
    assert integrate_tensor(f, tensor_rule(3, 2)) == pytest.approx(1 / 16, abs=1e-15)


def test_integrate_quartic_shows_gap():
    # separable oracle: 4 int x^2 (1 - x)(x - 4) = -17/15, the 3-point rule gives -7/6
    f = lambda x: 4 * x[:, 0] ** 2 * (1 - x[:, 0]) * (x[:, 0] - 4)
    assert integrate_tensor(f, tensor_rule(3, 1)) == pytest.approx(-7 / 6, abs=1e-14)
    assert integrate_tensor(f, reference_rule(5, 1)) == pytest.approx(-17 / 15, abs=1e-14)


def test_vector_integrand():
    f = lambda x: np.stack([x[:, 0], x[:, 0] ** 2], axis=1)
    np.testing.assert_allclose(integrate_tensor(f, tensor_rule(3, 1)), [0.5, 1 / 3], atol=1e-15)


def test_reference_rule_oracle_cases():
    assert integrate_tensor(lambda x: 3.5 * np.ones(len(x)), reference_rule(1, 2)) == pytest.approx(3.5)
    assert integrate_tensor(lambda x: x[:, 0] ** 9, reference_rule(5, 1)) == pytest.approx(0.1, abs=1e-15)


def test_reference_rule_matches_lobatto_on_q3():
    ho, gl = reference_rule(5, 2), tensor_rule(3, 2)
    for a in range(4):
        for b in range(4):
            f = lambda x: x[:, 0] ** a * x[:, 1] ** b
            assert abs(integrate_tensor(f, ho) - integrate_tensor(f, gl)) <= 1e-13


def test_gauss_legendre_exactness():
    r = gauss_legendre_rule(4)
    for m in range(8):
        assert abs(r.weights @ r.points**m - 1 / (m + 1)) <= 1e-14
    assert abs(r.weights @ r.points**8 - 1 / 9) > 1e-8


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 8),
    a=st.integers(0, 13),
    b=st.integers(0, 13),
)
def test_separable_products_exact(n, a, b):
    limit = 2 * n - 3
    a, b = a % (limit + 1), b % (limit + 1)
    f = lambda x: x[:, 0] ** a * x[:, 1] ** b
    exact = 1.0 / ((a + 1) * (b + 1))
    assert abs(integrate_tensor(f, tensor_rule(n, 2)) - exact) <= 1e-12 * exact
