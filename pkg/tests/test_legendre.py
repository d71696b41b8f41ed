"""Legendre map, its inverse, the Hamiltonian, polar cones and the antipodal solvers."""

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightcone import autodiff as ad
from lightcone import core
from lightcone import legendre as Lg

ETA3 = np.diag([-1.0, 1.0, 1.0])

coord = st.floats(-3, 3, allow_nan=False)
vec3 = st.lists(coord, min_size=3, max_size=3).map(np.array).filter(lambda v: np.linalg.norm(v) > 0.2)


def future_timelike(v):
    """Lift ``v`` to a future timelike vector of the flat cone."""
    return np.array([np.linalg.norm(v[1:]) + 0.5 + abs(v[0]), v[1], v[2]])


# closed forms on the flat space -------------------------------------------------------


def test_minkowski_legendre_is_the_metric(mink2):
    v = np.array([2.0, 0.5, -1.0])
    assert np.array_equal(Lg.legendre(mink2, v), ETA3 @ v)
    assert np.allclose(Lg.legendre_inverse(mink2, ETA3 @ v), v, atol=1e-14)


def test_minkowski_hamiltonian_is_the_dual_form(mink2):
    p = np.array([-3.0, 1.0, 0.5])
    assert Lg.hamiltonian(mink2, p) == pytest.approx(0.5 * (-9 + 1 + 0.25), rel=1e-14)
    dm = Lg.dual_metric(mink2, p)
    assert np.allclose(dm.matrix, ETA3) and np.allclose(dm.preimage, ETA3 @ p)


def test_minkowski_dual_hessian(mink2):
    check = Lg.dual_hessian_check(mink2, [-2.0, 0.3, 0.4])
    assert check.error < 1e-6


def test_minkowski_polar_cone(mink2, mink2_atlas, future):
    f = future(mink2_atlas)
    inside = Lg.polar_membership(mink2, mink2_atlas, [-2.0, 0.5, 0.5], f)
    assert inside.verdict == Lg.TIMELIKE_DUAL and inside.consistent
    assert inside.preimage_class == core.TIMELIKE and inside.support < 0
    outside = Lg.polar_membership(mink2, mink2_atlas, [2.0, 0.5, 0.5], f)
    assert outside.verdict == Lg.OUTSIDE and outside.consistent
    null = Lg.polar_membership(mink2, mink2_atlas, [-1.0, 1.0, 0.0], f)
    assert null.preimage_class == core.LIGHTLIKE
    assert abs(null.support) < 1e-3


def test_minkowski_dual_norm(mink2):
    v = np.array([2.0, 0.6, 0.3])
    p = ETA3 @ v
    check = Lg.dual_norm(mink2, None, p, samples=50000)
    expected = np.sqrt(-(v @ ETA3 @ v))
    assert check.closed_form == pytest.approx(expected, rel=1e-12)
    assert 0 <= check.relative_gap < 0.01


# bump Lagrangian ------------------------------------------------------------------------


def test_round_trips_on_the_bump_lagrangian(beem, rng):
    V = rng.standard_normal((500, 3))
    ok, P = Lg.legendre_many(beem, V)
    assert ok.all()
    W, rn = Lg.legendre_inverse_many(beem, P)
    assert np.all(rn < Lg.INVERSE_TOL)
    assert np.max(np.linalg.norm(W - V, axis=1) / np.linalg.norm(V, axis=1)) < 1e-8


def test_hamiltonian_equals_lagrangian_on_preimages(beem, rng):
    V = rng.standard_normal((200, 3))
    _, P = Lg.legendre_many(beem, V)
    H, conv = Lg.hamiltonian_many(beem, P)
    _, L = core.evaluate_many(beem, V, order=0)
    assert conv.all()
    assert np.max(np.abs(H - L) / np.maximum(1, np.abs(L))) < 1e-9


def test_dual_hessian_on_the_bump_lagrangian(beem):
    for v in [[1.0, 0.5, 0.3], [0.3, 1.0, -0.2], [-1.0, 0.7, 0.7]]:
        p = Lg.legendre(beem, v)
        assert Lg.dual_hessian_check(beem, p).error < 1e-5


def test_on_shell_injectivity(beem, beem_atlas, future):
    probe = Lg.on_shell_injectivity_probe(beem, beem_atlas, future(beem_atlas), pairs=2000)
    assert probe.injective and probe.pairs > 1900 and probe.worst_ratio > 1e-3


def test_polar_membership_agrees_with_preimages(beem, beem_atlas, future, rng):
    f = future(beem_atlas)
    verdicts = []
    for p in rng.standard_normal((40, 3)):
        m = Lg.polar_membership(beem, beem_atlas, p, f)
        assert m.consistent
        verdicts.append(m.verdict)
    assert Lg.TIMELIKE_DUAL in verdicts and Lg.OUTSIDE in verdicts


def test_dual_norm_with_an_atlas(beem, beem_atlas, future):
    p = Lg.legendre(beem, [1.5, 0.3, 0.2])
    check = Lg.dual_norm(beem, beem_atlas, p, samples=100000)
    assert 0 <= check.relative_gap < 0.01 and check.used > 1000


def test_dual_norm_rejects_outside_covectors(beem, beem_atlas):
    with pytest.raises(ValueError):
        Lg.dual_norm(beem, beem_atlas, [0.0, 1.0, 0.0], samples=1000)


def test_dual_norm_needs_an_atlas_when_not_reversible(odd):
    with pytest.raises(ValueError):
        Lg.dual_norm(odd, None, [-1.0, 0.0, 0.0], samples=1000)


# inversion failures and dimension two ---------------------------------------------------------


def test_zero_covector_rejected(beem):
    with pytest.raises(ValueError):
        Lg.legendre_inverse_many(beem, [[0.0, 0.0, 0.0]])


def test_inverse_reports_best_iterate():
    # l(v) = (0, 0, v2) never reaches e0
    spec = core.from_expression("0.5*v2^2", 3)
    with pytest.raises(Lg.ConvergenceError) as info:
        Lg.legendre_inverse(spec, [1.0, 0.0, 1.0])
    assert info.value.best is not None
    assert info.value.residual == pytest.approx(np.sqrt(0.5), rel=1e-6)


def test_dimension_two_warns_about_uniqueness():
    spec = core.beem2(0.05)
    with pytest.warns(Lg.NonUniqueWarning):
        v = Lg.legendre_inverse(spec, Lg.legendre(spec, [1.0, 0.3]))
    assert np.allclose(Lg.legendre(spec, v), Lg.legendre(spec, [1.0, 0.3]), atol=1e-10)


def test_non_reversible_round_trips(odd, rng):
    V = rng.standard_normal((300, 3))
    _, P = Lg.legendre_many(odd, V)
    W, rn = Lg.legendre_inverse_many(odd, P)
    assert np.all(rn < Lg.INVERSE_TOL)
    assert np.allclose(W, V, atol=1e-8)


def test_randers_inverse_inside_the_domain():
    spec = core.randers4()
    v = np.array([3.0, 0.5, 0.4, -0.2])
    assert np.allclose(Lg.legendre_inverse(spec, Lg.legendre(spec, v)), v, atol=1e-9)


def test_legendre_outside_the_domain():
    with pytest.raises(ad.DomainError):
        Lg.legendre(core.randers4(), [0.1, 1.0, 0.0, 0.0])


# Borsuk-Ulam type solvers ---------------------------------------------------------------------


def test_antipodal_pair_is_trivial_on_reversible_specs(beem):
    w = np.array([0.4, 1.0, -0.3])
    pair = Lg.antipodal_momentum_pair(beem, w)
    assert pair.residual < 1e-10
    assert np.allclose(pair.v2 - pair.v1, 2 * w)
    assert np.allclose(Lg.legendre(beem, pair.v1), -Lg.legendre(beem, pair.v2), atol=1e-10)


def test_antipodal_pair_on_a_non_reversible_spec(odd):
    w = np.array([0.2, 1.0, 0.5])
    pair = Lg.antipodal_momentum_pair(odd, w)
    assert pair.residual < 1e-8
    assert np.linalg.norm(Lg.legendre(odd, pair.v1) + Lg.legendre(odd, pair.v2)) < 1e-7


def test_antipodal_pair_needs_three_dimensions():
    with pytest.raises(ValueError):
        Lg.antipodal_momentum_pair(core.beem2(0.05), [0.0, 1.0])


def test_symmetrized_solve(odd, beem):
    q = np.array([0.3, -0.2, 1.0])
    for spec in (beem, odd):
        sol = Lg.symmetrized_legendre_solve(spec, q)
        lhs = 0.5 * (Lg.legendre(spec, sol.v) - Lg.legendre(spec, -sol.v))
        assert sol.residual < 1e-8 and np.allclose(lhs, q, atol=1e-8)
    with pytest.raises(ValueError):
        Lg.symmetrized_legendre_solve(odd, [0.0, 0.0, 0.0])


def test_antisymmetry_ray_is_trivial_on_reversible_specs(beem):
    ray = Lg.antisymmetry_ray(beem)
    assert ray.s == pytest.approx(1.0, abs=1e-10) and ray.residual < 1e-10


def test_antisymmetry_ray_on_the_odd_perturbation(odd):
    beta = 0.05
    ray = Lg.antisymmetry_ray(odd, initial=[0.0, 1.0, 0.0])
    # along +-e1 the momenta are (1 + 2 beta) e1 and -(1 - 2 beta) e1
    assert ray.s == pytest.approx((1 - 2 * beta) / (1 + 2 * beta), rel=1e-8)
    ray = Lg.antisymmetry_ray(odd)
    assert ray.residual < 1e-8 and ray.s > 0
    lp, lm = Lg.legendre(odd, ray.v), Lg.legendre(odd, -ray.v)
    assert np.allclose(lm, -ray.s * lp, atol=1e-8)


# properties ---------------------------------------------------------------------------------


@given(vec3)
@settings(max_examples=60, deadline=None)
def test_legendre_is_homogeneous_of_degree_one(v):
    spec = core.beem3(0.05)
    assert np.allclose(Lg.legendre(spec, 2.5 * v), 2.5 * Lg.legendre(spec, v), rtol=1e-12, atol=1e-12)
    assert Lg.legendre(spec, v) @ v == pytest.approx(2 * core.eval_L(spec, v), rel=1e-10, abs=1e-12)


@given(vec3)
@settings(max_examples=60, deadline=None)
def test_inverse_round_trip(v):
    spec = core.beem3(0.05)
    w = Lg.legendre_inverse(spec, Lg.legendre(spec, v))
    assert np.linalg.norm(w - v) < 1e-8 * np.linalg.norm(v)


@given(vec3)
@settings(max_examples=40, deadline=None)
def test_flat_future_covectors_lie_in_the_polar_cone(v):
    spec = core.minkowski(2)
    p = ETA3 @ future_timelike(v)
    for u in core.random_directions(3, 50, 0):
        if u[0] > np.linalg.norm(u[1:]):
            assert p @ u < 0
    assert Lg.hamiltonian(spec, p) < 0


def test_flat_solver_examples(mink2):
    sol = Lg.symmetrized_legendre_solve(mink2, [-1.0, 0.0, 0.0])
    assert np.allclose(sol.v, [1.0, 0.0, 0.0], atol=1e-12)
    assert Lg.antisymmetry_ray(mink2).s == pytest.approx(1.0, abs=1e-12)
