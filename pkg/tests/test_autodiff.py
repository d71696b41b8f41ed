"""Second-order forward-mode differentiation against closed forms and finite differences."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightcone import autodiff as ad
from lightcone import core

finite = st.floats(min_value=-3, max_value=3, allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=0.2, max_value=3, allow_nan=False, allow_infinity=False)
point3 = st.tuples(finite, finite, finite)


# closed-form oracles -----------------------------------------------------------


@pytest.mark.parametrize("v, index, value, grad", [
    ((3, 4), 0, 3, (1, 0)),
    ((3, 4), 1, 4, (0, 1)),
    ((1, 2, 5), 2, 5, (0, 0, 1)),
])
def test_lift_seeds_one_coordinate(v, index, value, grad):
    x = ad.lift(v, index)
    assert x.value == value
    assert np.array_equal(x.gradient, grad)
    assert not np.any(x.hessian)


@pytest.mark.parametrize("index", [-1, 2, 7])
def test_lift_rejects_out_of_range_index(index):
    with pytest.raises(IndexError):
        ad.lift((3, 4), index)


def test_square_of_one_variable():
    value, grad, hess = ad.derivatives(lambda x: x[0] * x[0], [3.0])
    assert value == 9 and grad.tolist() == [6] and hess.tolist() == [[2]]


def test_quadratic_form_in_two_variables():
    value, grad, hess = ad.derivatives(lambda x: 0.5 * (-x[0] ** 2 + x[1] ** 2), [1.0, 1.0])
    assert value == 0
    assert grad.tolist() == [-1, 1]
    assert hess.tolist() == [[-1, 0], [0, 1]]


def test_bump_lagrangian_hessian_matches_finite_differences():
    spec = core.beem3(0.05)
    v = np.array([1.0, 0.3, 0.2])
    _, _, hess = ad.derivatives(spec, v)
    fd = ad.fd_hessian(lambda x: float(spec(list(x))), v, step=1e-4)
    assert np.max(np.abs(hess - fd)) < 1e-6


def test_elementary_functions_match_closed_forms():
    x = 0.7
    for f, d1, d2 in [
        (ad.sqrt, lambda t: 0.5 / np.sqrt(t), lambda t: -0.25 * t**-1.5),
        (ad.exp, np.exp, np.exp),
        (ad.log, lambda t: 1 / t, lambda t: -1 / t**2),
        (ad.sin, np.cos, lambda t: -np.sin(t)),
        (ad.cos, lambda t: -np.sin(t), lambda t: -np.cos(t)),
    ]:
        _, g, h = ad.derivatives(lambda v: f(v[0]), [x])
        assert g[0] == pytest.approx(d1(x), rel=1e-14)
        assert h[0, 0] == pytest.approx(d2(x), rel=1e-14)


def test_rational_power_uses_exp_log():
    _, g, h = ad.derivatives(lambda v: v[0] ** 1.5, [4.0])
    assert g[0] == pytest.approx(1.5 * 2.0, rel=1e-14)
    assert h[0, 0] == pytest.approx(0.75 / 2.0, rel=1e-14)


def test_integer_power_is_exact_for_polynomials():
    value, grad, hess = ad.derivatives(lambda v: v[0] ** 5, [3.0])
    assert value == 243 and grad[0] == 405 and hess[0, 0] == 540


def test_negative_integer_power():
    value, grad, hess = ad.derivatives(lambda v: v[0] ** -2, [2.0])
    assert value == 0.25 and grad[0] == -0.25 and hess[0, 0] == pytest.approx(0.375, rel=1e-15)


# domain errors -------------------------------------------------------------------


@pytest.mark.parametrize("f", [
    lambda v: ad.sqrt(v[0] - 2),
    lambda v: ad.log(v[0] - 1),
    lambda v: 1 / (v[0] - 1),
    lambda v: (v[0] - 2) ** 0.5,
])
def test_domain_violations_raise(f):
    with pytest.raises(ad.DomainError):
        ad.derivatives(f, [1.0])


def test_domain_error_carries_mask_for_batches():
    V = np.array([[4.0], [-1.0], [9.0]])
    with pytest.raises(ad.DomainError) as info:
        ad.derivatives(lambda v: ad.sqrt(v[0]), V)
    assert info.value.mask.tolist() == [False, True, False]


def test_exponential_underflow_is_guarded():
    value, grad, hess = ad.derivatives(lambda v: ad.exp(-v[0]), [800.0])
    assert value == 0 and grad[0] == 0 and hess[0, 0] == 0


def test_bump_near_axis_is_finite():
    spec = core.beem3(0.05)
    v = np.array([1.0, 1e-3, 0.0])
    fd = ad.fd_hessian(lambda x: float(spec(list(x))), v, step=1e-4)
    _, _, hess = ad.derivatives(spec, v)
    assert np.all(np.isfinite(fd)) and np.all(np.isfinite(hess))
    assert np.allclose(hess, np.diag([-1.0, 1.0, 1.0]), atol=1e-9)


# finite-difference oracle ----------------------------------------------------------


def test_fd_hessian_of_bilinear_form():
    H = ad.fd_hessian(lambda v: v[0] * v[1], [2.0, 3.0], step=1e-3)
    assert abs(H[0, 1] - 1) < 1e-6 and abs(H[1, 0] - 1) < 1e-6
    assert np.array_equal(H, H.T)


def test_fd_hessian_of_minkowski():
    spec = core.minkowski(3)
    H = ad.fd_hessian(lambda v: float(spec(list(v))), [0.3, -1.2, 0.5, 2.0])
    assert np.allclose(H, np.diag([-1.0, 1, 1, 1]), atol=1e-6)


def test_fd_hessian_reports_failing_stencil_point():
    with pytest.raises(ad.DomainError) as info:
        ad.fd_hessian(lambda v: float(ad.sqrt(v[0])), [1e-5], step=1e-4)
    assert info.value.point is not None and info.value.point[0] < 0


def test_fd_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        ad.fd_hessian(lambda v: v[0], [1.0], step=0)
    with pytest.raises(ValueError):
        ad.fd_gradient(lambda v: v[0], [1.0], step=-1)


# properties ------------------------------------------------------------------------


def _composite(x):
    a, b, c = x
    return ad.sin(a * b) * ad.exp(0.3 * c) + ad.sqrt(a * a + b * b + c * c + 1) / (2 + ad.cos(b - c))


@given(point3)
@settings(max_examples=60, deadline=None)
def test_hessian_matches_finite_differences(p):
    v = np.array(p)
    _, grad, hess = ad.derivatives(_composite, v)
    f = lambda x: float(_composite(list(x)))
    assert np.max(np.abs(grad - ad.fd_gradient(f, v))) < 1e-7
    assert np.max(np.abs(hess - ad.fd_hessian(f, v))) < 1e-5


@given(point3)
@settings(max_examples=60, deadline=None)
def test_hessian_is_exactly_symmetric(p):
    _, _, hess = ad.derivatives(_composite, np.array(p))
    assert np.array_equal(hess, hess.T)


@given(point3, point3)
@settings(max_examples=60, deadline=None)
def test_value_slot_agrees_with_real_arithmetic(p, q):
    x = ad.variables(np.array(p))
    y = [float(t) for t in q]
    for xi, xr, yr in zip(x, p, y):
        assert float((xi * yr + xi - yr).value) == pytest.approx(xr * yr + xr - yr, abs=1e-12)
        if abs(yr) > 1e-3:
            assert float((xi / yr).value) == pytest.approx(xr / yr, rel=1e-12)


@given(point3)
@settings(max_examples=60, deadline=None)
def test_multiplication_commutes_and_associates(p):
    a, b, c = ad.variables(np.array(p))
    a = a + 0.5 * b
    b = b * b - c
    c = ad.exp(0.2 * c)
    for left, right in [(a * b, b * a), ((a * b) * c, a * (b * c))]:
        assert np.allclose(left.value, right.value, rtol=1e-12, atol=1e-12)
        assert np.allclose(left.gradient, right.gradient, rtol=1e-12, atol=1e-12)
        assert np.allclose(left.hessian, right.hessian, rtol=1e-12, atol=1e-12)


@given(st.tuples(positive, positive))
@settings(max_examples=60, deadline=None)
def test_power_rules(p):
    x, y = ad.variables(np.array(p))
    lhs = (x * y) ** 1.5
    rhs = x**1.5 * y**1.5
    assert np.allclose(lhs.hessian, rhs.hessian, rtol=1e-10, atol=1e-12)
    square = x**2
    assert np.array_equal(square.hessian, (x * x).hessian)
