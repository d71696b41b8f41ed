"""Reverse Cauchy-Schwarz and triangle inequalities, hyperplanes and support tests.

All statements concern vectors of a single closed cone ``J^alpha``; an atlas
decides which cone a vector belongs to.  The Lorentz-Finsler norm of a causal
vector is ``F(v) = sqrt(-2 L(v))``, clamped to 0 inside the lightlike band.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .atlas import ConeAtlas, rescale_to_level
from .core import (EPS_CLS, LIGHTLIKE, SPACELIKE, TIMELIKE, LagrangianSpec, causal_label,
                   evaluate_many)
from .legendre import ConvergenceError, legendre_many, solve_system

EQUALITY_ANGLE = 1e-6  # radians between rays counted as proportional
MARGIN_TOL = 1e-9

INSIDE = "INSIDE"
OUTSIDE = "OUTSIDE"
NULL = "NULL"


class PreconditionError(ValueError):
    """Inputs violate the hypotheses of an inequality (with their classification)."""


@dataclass(frozen=True)
class InequalityMargin:
    margin: float  # left - right
    left: float
    right: float
    equality_case: bool  # inputs proportional within EQUALITY_ANGLE


def angle_between(a, b) -> np.ndarray:
    """Angle between rays, accurate for nearly parallel inputs."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    ua = a / np.linalg.norm(a, axis=1, keepdims=True)
    ub = b / np.linalg.norm(b, axis=1, keepdims=True)
    return 2 * np.arctan2(np.linalg.norm(ua - ub, axis=1), np.linalg.norm(ua + ub, axis=1))


def _norm_F(two_L, V):
    """``sqrt(-2L)`` with the lightlike band snapped to 0."""
    band = EPS_CLS * np.einsum("ij,ij->i", V, V)
    return np.sqrt(np.where(two_L < -band, -two_L, 0.0))


def _check_pairs(spec, V1, V2, atlas, component_id):
    ok1, L1, g1, _ = evaluate_many(spec, V1)
    ok2, L2, _, _ = evaluate_many(spec, V2)
    n1 = np.einsum("ij,ij->i", V1, V1)
    n2 = np.einsum("ij,ij->i", V2, V2)
    c1 = np.where(ok1, causal_label(2 * L1, n1), "HOLE")
    c2 = np.where(ok2, causal_label(2 * L2, n2), "HOLE")
    causal = ok1 & ok2 & (c1 != SPACELIKE) & (c2 != SPACELIKE)
    if atlas is not None:
        a1, a2 = atlas.locate_many(V1), atlas.locate_many(V2)
        same = (a1 == a2) & (a1 >= 0)
        if component_id is not None:
            same &= a1 == component_id
        causal &= same
    else:
        a1 = a2 = np.full(len(V1), -1)
    if not causal.all():
        i = int(np.flatnonzero(~causal)[0])
        raise PreconditionError(
            f"pair {i} is not in a single causal cone: v1 {c1[i]} (component {a1[i]}), "
            f"v2 {c2[i]} (component {a2[i]})")
    return L1, g1, L2


def reverse_cs_many(spec: LagrangianSpec, V1, V2, atlas: Optional[ConeAtlas] = None,
                    component_id: Optional[int] = None):
    """Vectorised reverse Cauchy-Schwarz: ``(margin, left, right, proportional)``.

    ``left = -g_{v1}(v1, v2)``, ``right = F(v1) F(v2)``.
    """
    V1 = np.atleast_2d(np.asarray(V1, dtype=float))
    V2 = np.atleast_2d(np.asarray(V2, dtype=float))
    L1, g1, L2 = _check_pairs(spec, V1, V2, atlas, component_id)
    left = -np.einsum("ij,ij->i", g1, V2)
    right = _norm_F(2 * L1, V1) * _norm_F(2 * L2, V2)
    return left - right, left, right, angle_between(V1, V2) < EQUALITY_ANGLE


def reverse_triangle_many(spec: LagrangianSpec, V1, V2, atlas: Optional[ConeAtlas] = None,
                          component_id: Optional[int] = None):
    """Vectorised reverse triangle inequality: ``F(v1+v2) >= F(v1) + F(v2)``."""
    V1 = np.atleast_2d(np.asarray(V1, dtype=float))
    V2 = np.atleast_2d(np.asarray(V2, dtype=float))
    L1, _, L2 = _check_pairs(spec, V1, V2, atlas, component_id)
    W = V1 + V2
    ok, Lw = evaluate_many(spec, W, order=0)
    if not ok.all() or np.any(causal_label(2 * Lw, np.einsum("ij,ij->i", W, W)) == SPACELIKE):
        raise PreconditionError("the sum of the pair left the causal cone")
    left = _norm_F(2 * Lw, W)
    right = _norm_F(2 * L1, V1) + _norm_F(2 * L2, V2)
    return left - right, left, right, angle_between(V1, V2) < EQUALITY_ANGLE


def reverse_cs_margin(spec: LagrangianSpec, v1, v2, atlas: Optional[ConeAtlas] = None) -> InequalityMargin:
    m, l, r, eq = reverse_cs_many(spec, v1, v2, atlas)
    return InequalityMargin(float(m[0]), float(l[0]), float(r[0]), bool(eq[0]))


def reverse_triangle_margin(spec: LagrangianSpec, v1, v2,
                            atlas: Optional[ConeAtlas] = None) -> InequalityMargin:
    m, l, r, eq = reverse_triangle_many(spec, v1, v2, atlas)
    return InequalityMargin(float(m[0]), float(l[0]), float(r[0]), bool(eq[0]))


def sample_pairs(atlas: ConeAtlas, component_id: int, count: int, seed: int = 0,
                 radii: tuple = (0.1, 10.0)):
    """Pairs drawn uniformly from a cone's sampled causal directions (timelike
    samples and shell points) with independent log-uniform radii."""
    U = atlas.causal_points(component_id)
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(U), count)
    j = rng.integers(0, len(U), count)
    r = np.exp(rng.uniform(np.log(radii[0]), np.log(radii[1]), (2, count)))
    return U[i] * r[0, :, None], U[j] * r[1, :, None]


@dataclass(frozen=True)
class InequalityScan:
    pairs: int
    seed: int
    min_cs_margin: float
    min_triangle_margin: float
    equality_cases: int  # pairs with margin below MARGIN_TOL in either inequality
    proportional_pairs: int
    improper_equalities: int  # equality cases that are not proportional pairs
    tolerance: float = MARGIN_TOL

    @property
    def passed(self) -> bool:
        return (self.min_cs_margin >= -self.tolerance and self.min_triangle_margin >= -self.tolerance
                and self.improper_equalities == 0)


def inequality_scan(spec: LagrangianSpec, atlas: ConeAtlas, component_id: int, pairs: int = 100_000,
                    seed: int = 0) -> InequalityScan:
    V1, V2 = sample_pairs(atlas, component_id, pairs, seed)
    cs, _, _, prop = reverse_cs_many(spec, V1, V2, atlas, component_id)
    tri, _, _, _ = reverse_triangle_many(spec, V1, V2, atlas, component_id)
    eq = (cs < MARGIN_TOL) | (tri < MARGIN_TOL)
    return InequalityScan(pairs, seed, float(cs.min()), float(tri.min()), int(eq.sum()),
                          int(prop.sum()), int(np.sum(eq & ~prop)))


def gradient_form_residual(spec: LagrangianSpec, v1, v2) -> float:
    """``|v2 . dF(v1) + g_{v1}(v1, v2)/F(v1)|`` with ``dF`` from differentiating ``sqrt(-2L)``."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    F = ad.sqrt(-2.0 * spec(ad.variables(v1[None, :])))
    lhs = float(F.gradient[0] @ v2)
    _, g = legendre_many(spec, v1[None, :])
    rhs = -float(g[0] @ v2) / float(F.value[0])
    return abs(lhs - rhs)


@dataclass(frozen=True)
class OrthogonalGrowth:
    L_perturbed: float  # L(v + w_perp)
    L_base: float
    orthogonality: float  # |g_v(v, w_perp)|
    strict: bool  # w_perp is not negligible and the growth is strict
    passed: bool


def orthogonal_growth(spec: LagrangianSpec, v, w, tol: float = 1e-10) -> OrthogonalGrowth:
    """``L(v + w_perp) >= L(v)`` for ``w_perp`` the ``g_v``-orthogonal part of ``w``."""
    if spec.reversible is False:
        raise PreconditionError("orthogonal growth is stated for reversible Lagrangians")
    if spec.dimension < 3:
        raise PreconditionError("orthogonal growth needs dimension >= 3")
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    ok, L, g, _ = evaluate_many(spec, v[None, :])
    if not ok[0] or causal_label(2 * L[0], v @ v) != TIMELIKE:
        raise PreconditionError("v must be timelike")
    p = g[0]
    w_perp = w - (p @ w) / (p @ v) * v
    if not np.any(w_perp):
        return OrthogonalGrowth(float(L[0]), float(L[0]), 0.0, False, True)
    ok2, L2 = evaluate_many(spec, (v + w_perp)[None, :], order=0)
    if not ok2[0]:
        raise PreconditionError("v + w_perp is outside the domain")
    gain = L2[0] - L[0]
    significant = np.linalg.norm(w_perp) > 1e-8 * np.linalg.norm(v)
    return OrthogonalGrowth(float(L2[0]), float(L[0]), float(abs(p @ w_perp)),
                            bool(significant and gain > 0), bool(gain >= -tol))


# hyperplanes ----------------------------------------------------------------------


@dataclass(frozen=True)
class Hyperplane:
    basis: np.ndarray  # (n, n+1), rows span W

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.basis, dtype=float))
        object.__setattr__(self, "basis", B)
        if B.shape[0] != B.shape[1] - 1 or np.linalg.matrix_rank(B) != B.shape[0]:
            raise ValueError("a hyperplane needs n linearly independent vectors in dimension n+1")

    @property
    def normal(self) -> np.ndarray:
        """Euclidean unit normal (the annihilating covector of ``W``)."""
        _, _, vt = np.linalg.svd(self.basis)
        return vt[-1]

    @classmethod
    def from_covector(cls, nu) -> "Hyperplane":
        """The kernel of the covector ``nu``."""
        nu = np.asarray(nu, dtype=float)
        _, _, vt = np.linalg.svd(nu[None, :])
        return cls(vt[1:])


@dataclass(frozen=True)
class HyperplaneClass:
    classification: str  # SPACELIKE, NULL or TIMELIKE
    min_height: float  # min of the oriented normal over the cone's unit causal samples
    tolerance: float


def classify_hyperplane(spec: LagrangianSpec, atlas: ConeAtlas, W: Hyperplane,
                        component_id: int) -> HyperplaneClass:
    """Does ``W`` miss the cone (SPACELIKE), touch it along the shell (NULL) or cut it?"""
    n = W.normal
    times = atlas.timelike_points(component_id) @ n
    heights = atlas.causal_points(component_id) @ n
    if np.sum(times) < 0:
        heights = -heights
    tol = atlas.sample.spacing() ** 2
    m = float(heights.min())
    if m < -tol:
        cls = TIMELIKE
    elif m <= tol:
        cls = NULL
    else:
        cls = SPACELIKE
    return HyperplaneClass(cls, m, tol)


@dataclass(frozen=True)
class HyperplaneNormal:
    u: np.ndarray
    residual: float
    restarts: int
    spread: float  # largest angle between the rays found from different starts
    lightlike: bool


def hyperplane_normal(spec: LagrangianSpec, atlas: ConeAtlas, W: Hyperplane, component_id: int,
                      restarts: int = 10, tol: float = 1e-9, agree: float = 1e-8) -> HyperplaneNormal:
    """``u`` in the cone with ``g_u(u, w) = 0`` for all ``w`` in ``W``.

    Solves ``{l(u).w_i = 0, 2L(u) = -1}`` (``|u| = 1`` for a NULL plane) by
    Newton with the exact Jacobian ``[g_u w_i; 2 l(u)]``, restarting from the
    cone samples whose Legendre images are closest to annihilating ``W``.
    """
    cls = classify_hyperplane(spec, atlas, W, component_id).classification
    if cls == TIMELIKE:
        raise PreconditionError("a timelike hyperplane has no causal normal")
    null = cls == NULL
    B = W.basis
    d = spec.dimension
    if null:
        cand = atlas.causal_points(component_id)
    else:
        cand = rescale_to_level(spec, atlas.timelike_points(component_id), 1.0)
    _, P = legendre_many(spec, cand)
    score = np.linalg.norm((P / np.linalg.norm(P, axis=1, keepdims=True)) @ B.T, axis=1)
    order = np.argsort(score)[:restarts]

    def system(u):
        ok, L, g, h = evaluate_many(spec, u[None, :])
        if not ok[0]:
            raise ad.DomainError("outside the domain", point=u)
        r = np.empty(d)
        J = np.empty((d, d))
        r[:-1] = B @ g[0]
        J[:-1] = B @ h[0]
        if null:
            r[-1], J[-1] = (u @ u - 1) / 2, u
        else:
            r[-1], J[-1] = 2 * L[0] + 1, 2 * g[0]
        return r, J

    found, res = [], []
    for k in order:
        try:
            u, rr = solve_system(system, cand[k], tol, "hyperplane normal")
        except (ConvergenceError, ad.DomainError):
            continue
        if atlas.locate(u) == component_id:
            found.append(u)
            res.append(rr)
    if not found:
        raise ConvergenceError("no restart converged to a normal in the cone")
    U = np.array(found)
    spread = float(np.max(angle_between(U, np.repeat(U[:1], len(U), axis=0))))
    best = U[int(np.argmin(res))]
    if spread > agree:
        raise ConvergenceError(f"restarts disagree by {spread:.3g} rad", best, float(min(res)))
    return HyperplaneNormal(best, float(max(res)), len(U), spread, null)


# support characterisation -----------------------------------------------------------


@dataclass(frozen=True)
class SupportVerdict:
    verdict: str  # INSIDE or OUTSIDE
    support: float  # max over shell points u of g_u(u, v), normalised
    direct: str  # INSIDE / OUTSIDE from direct classification
    consistent: bool


def support_many(spec: LagrangianSpec, atlas: ConeAtlas, V, component_id: int, tol: float = 1e-12):
    """``(support_inside, direct_inside, in_band)`` for a batch of vectors.

    The support route tests ``g_u(u, v) <= 0`` for every shell point ``u`` of
    the cone; the direct route classifies ``v`` and locates its cone.
    ``in_band`` marks rows within the lightlike tolerance band.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    shell = atlas.shell_of(component_id)
    _, P = legendre_many(spec, shell)
    P = P / np.linalg.norm(P, axis=1, keepdims=True)
    U = V / np.linalg.norm(V, axis=1, keepdims=True)
    support = np.max(U @ P.T, axis=1)
    ok, L = evaluate_many(spec, U, order=0)
    labels = np.where(ok, causal_label(2 * L, 1.0), "HOLE")
    direct = ok & (labels != SPACELIKE) & (atlas.locate_many(U) == component_id)
    return support <= tol, direct, labels == LIGHTLIKE, support


def support_membership(spec: LagrangianSpec, atlas: ConeAtlas, v, component_id: int,
                       tol: float = 1e-12) -> SupportVerdict:
    inside, direct, _, support = support_many(spec, atlas, v, component_id, tol)
    return SupportVerdict(INSIDE if inside[0] else OUTSIDE, float(support[0]),
                          INSIDE if direct[0] else OUTSIDE, bool(inside[0] == direct[0]))
