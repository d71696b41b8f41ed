"""Legendre map ``v -> g_v(v, .)``, its inverse, the dual Hamiltonian and polar cones.

The inverse is a damped Newton iteration whose Jacobian is the fundamental
tensor itself.  Because the map is 1-homogeneous the target covector is
normalised first and the solution rescaled afterwards.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .atlas import ConeAtlas
from .autodiff import DomainError, fd_hessian
from .core import LIGHTLIKE, SPACELIKE, TIMELIKE, LagrangianSpec, causal_label, evaluate_many
from .core import random_directions

MAX_ITER = 60
MAX_HALVINGS = 20
INVERSE_TOL = 1e-10  # relative residual |l(v) - p| / |p|
SOLVE_TOL = 1e-8

TIMELIKE_DUAL = "TIMELIKE_DUAL"
LIGHTLIKE_DUAL = "LIGHTLIKE_DUAL"
OUTSIDE = "OUTSIDE"


class ConvergenceError(RuntimeError):
    """A solver stopped without meeting its tolerance; ``best`` is its best iterate."""

    def __init__(self, message, best=None, residual=float("nan")):
        super().__init__(f"{message} (best residual {residual:.3g})")
        self.best = best
        self.residual = residual


class NonUniqueWarning(UserWarning):
    """In dimension 2 the Legendre map need not be injective."""


# generic solver -------------------------------------------------------------


def damped_newton(make_system: Callable, X0, max_iter: int = MAX_ITER,
                  max_halvings: int = MAX_HALVINGS, aim: float = 1e-15, pseudo: bool = False):
    """Row-wise damped Newton for a batch of square systems.

    ``make_system(rows)`` returns a function ``X -> (ok, R, J)`` evaluating the
    residuals and Jacobians of the systems ``rows`` at the iterates ``X``.  A
    step is halved (per row) until the residual norm decreases; rows that
    cannot improve are frozen.  Returns ``(X, residual_norms)``.
    """
    X = np.array(X0, dtype=float)
    n = len(X)
    ok, R, J = make_system(np.arange(n))(X)
    rn = _norms(ok, R)
    active = ok & (rn > aim)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        if pseudo:  # minimum-norm steps tolerate solution manifolds
            step = np.einsum("nij,nj->ni", np.linalg.pinv(J[idx], rcond=1e-10), R[idx])
        else:
            step = _solve(J[idx], R[idx])
        t = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        for _h in range(max_halvings + 1):
            sub = np.flatnonzero(pending)
            rows = idx[sub]
            trial = X[rows] - t[sub, None] * step[sub]
            tok, tR, tJ = make_system(rows)(trial)
            trn = _norms(tok, tR)
            better = trn < rn[rows]
            good = rows[better]
            X[good], R[good], J[good], rn[good] = trial[better], tR[better], tJ[better], trn[better]
            pending[sub[better]] = False
            t[sub] *= 0.5
            if not pending.any():
                break
        active[idx[pending]] = False  # stalled at the rounding floor
        active &= rn > aim
    return X, rn


def _norms(ok, R):
    with np.errstate(invalid="ignore"):
        rn = np.linalg.norm(R, axis=1)
    return np.where(ok & np.isfinite(rn), rn, np.inf)


def _solve(J, R):
    try:
        return np.linalg.solve(J, R[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return np.stack([np.linalg.lstsq(j, r, rcond=None)[0] for j, r in zip(J, R)])


def solve_system(system: Callable, x0, tol: float, what: str = "system") -> tuple:
    """Damped Newton on one system ``x -> (residual, jacobian)``; raises on failure.

    Steps use the pseudo-inverse, so a system whose solutions form a curve
    still converges (to a nearby point of the curve).
    """

    def make(rows):
        def f(X):
            ok = np.ones(len(X), dtype=bool)
            Rs, Js = [], []
            for i, x in enumerate(X):
                try:
                    r, j = system(x)
                except DomainError:
                    ok[i] = False
                    r = np.full(len(x), np.nan)
                    j = np.full((len(x), len(x)), np.nan)
                ok[i] &= bool(np.all(np.isfinite(r)))
                Rs.append(r)
                Js.append(j)
            return ok, np.array(Rs), np.array(Js)
        return f

    X, rn = damped_newton(make, np.atleast_2d(x0), pseudo=True)
    if not rn[0] <= tol:
        raise ConvergenceError(f"{what} did not converge", X[0], float(rn[0]))
    return X[0], float(rn[0])


# Legendre map ---------------------------------------------------------------


def legendre(spec: LagrangianSpec, v) -> np.ndarray:
    """``p_mu = g_{mu nu} v^nu = dL/dv^mu``."""
    v = np.asarray(v, dtype=float)
    ok, _, grad, _ = evaluate_many(spec, v[None, :])
    if not ok[0]:
        raise DomainError("Legendre map undefined", point=v)
    return grad[0]


def legendre_many(spec: LagrangianSpec, V):
    """``(ok, P)`` for a batch of vectors."""
    ok, _, grad, _ = evaluate_many(spec, V)
    return ok, grad


@lru_cache(maxsize=32)
def _seed_table(spec: LagrangianSpec, count: int = 4000, seed: int = 12345):
    U = random_directions(spec.dimension, count, seed)
    ok, P = legendre_many(spec, U)
    U, P = U[ok], P[ok]
    scale = np.linalg.norm(P, axis=1)
    keep = scale > 0
    return U[keep] / scale[keep, None], P[keep] / scale[keep, None]


def initial_guess(spec: LagrangianSpec, P, rank: int = 0) -> np.ndarray:
    """Table vectors whose Legendre images point closest to each row of ``P``
    (``rank`` picks the next-best match), scaled to the norms of those rows."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    U, images = _seed_table(spec)
    if len(U) == 0:
        raise ConvergenceError("no evaluable seed directions")
    cos = P @ images.T
    if rank == 0:
        k = np.argmax(cos, axis=1)
    else:
        k = np.argsort(-cos, axis=1)[:, min(rank, len(U) - 1)]
    return U[k] * np.linalg.norm(P, axis=1, keepdims=True)


def legendre_inverse_many(spec: LagrangianSpec, P, initial=None, retries: int = 4):
    """Invert the Legendre map row-wise.  Returns ``(V, relative_residuals)``;
    rows that fail keep their best iterate.

    Without an explicit start, rows that fail are retried from the next-best
    seed directions (a seed on the wrong sheet of a non-injective map cannot
    cross a degenerate fibre).
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    norms = np.linalg.norm(P, axis=1)
    if np.any(norms == 0):
        raise ValueError("the zero covector has no nonzero preimage")
    Q = P / norms[:, None]

    def solve(rows, X0):
        def make(sub):
            def f(X):
                ok, _, grad, hess = evaluate_many(spec, X)
                return ok, grad - Q[rows[sub]], hess
            return f
        return damped_newton(make, X0)

    all_rows = np.arange(len(Q))
    if initial is not None:
        return _rescaled(*solve(all_rows, np.atleast_2d(np.asarray(initial, dtype=float))
                               / norms[:, None]), norms)
    X, rn = solve(all_rows, initial_guess(spec, Q))
    for rank in range(1, retries + 1):
        bad = np.flatnonzero(~(rn < INVERSE_TOL))
        if len(bad) == 0:
            break
        Xb, rb = solve(bad, initial_guess(spec, Q[bad], rank))
        better = rb < rn[bad]
        X[bad[better]], rn[bad[better]] = Xb[better], rb[better]
    return _rescaled(X, rn, norms)


def _rescaled(X, rn, norms):
    return X * norms[:, None], rn


def legendre_inverse(spec: LagrangianSpec, p, initial_guess=None, tol: float = INVERSE_TOL):
    """The vector ``v`` with ``l(v) = p``.

    Raises :class:`ConvergenceError` (with the best iterate) when Newton fails
    to reach ``|l(v) - p| < tol |p|``.  In dimension 2 the answer is one of
    possibly several preimages and a :class:`NonUniqueWarning` is issued.
    """
    p = np.asarray(p, dtype=float)
    if spec.dimension == 2:
        warnings.warn("the Legendre map need not be injective in dimension 2", NonUniqueWarning,
                      stacklevel=2)
    V, rn = legendre_inverse_many(spec, p[None, :],
                                  None if initial_guess is None else np.asarray(initial_guess)[None, :])
    if not rn[0] < tol:
        raise ConvergenceError("Legendre inverse did not converge", V[0], float(rn[0]))
    return V[0]


@dataclass(frozen=True)
class InjectivityProbe:
    pairs: int
    collisions: int  # pairs whose images differ by less than ``tol`` times their separation
    worst_ratio: float  # min |l(v1) - l(v2)| / |v1 - v2| over the probed pairs

    @property
    def injective(self) -> bool:
        return self.collisions == 0


def on_shell_injectivity_probe(spec: LagrangianSpec, atlas: ConeAtlas, component_id: int,
                               pairs: int = 2000, seed: int = 0, tol: float = 1e-9) -> InjectivityProbe:
    """Random non-proportional pairs in one closed cone must have distinct Legendre images."""
    U = atlas.causal_points(component_id)
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(U), pairs)
    j = rng.integers(0, len(U), pairs)
    keep = np.abs(np.einsum("ij,ij->i", U[i], U[j])) < 1 - 1e-9
    radii = np.exp(rng.uniform(np.log(0.1), np.log(10.0), (2, pairs)))
    a = U[i[keep]] * radii[0, keep, None]
    b = U[j[keep]] * radii[1, keep, None]
    _, la = legendre_many(spec, a)
    _, lb = legendre_many(spec, b)
    ratio = np.linalg.norm(la - lb, axis=1) / np.linalg.norm(a - b, axis=1)
    return InjectivityProbe(int(keep.sum()), int(np.sum(~(ratio > tol))), float(np.min(ratio)))


# Hamiltonian and dual metric --------------------------------------------------


def hamiltonian(spec: LagrangianSpec, p, initial_guess=None) -> float:
    """``H(p) = p g_v^{-1} p / 2`` with ``v = l^{-1}(p)``."""
    p = np.asarray(p, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonUniqueWarning)
        v = legendre_inverse(spec, p, initial_guess)
    _, _, _, hess = evaluate_many(spec, v[None, :])
    return 0.5 * float(p @ np.linalg.solve(hess[0], p))


def hamiltonian_many(spec: LagrangianSpec, P):
    """``(H, converged)`` for a batch of covectors."""
    V, rn = legendre_inverse_many(spec, P)
    _, _, _, hess = evaluate_many(spec, V)
    P = np.atleast_2d(P)
    H = 0.5 * np.einsum("ni,ni->n", P, np.linalg.solve(hess, P[..., None])[..., 0])
    return H, rn < INVERSE_TOL


@dataclass(frozen=True)
class DualMetric:
    matrix: np.ndarray  # g*_p = (g_v)^{-1}
    basepoint: np.ndarray  # the covector p
    preimage: np.ndarray  # v = l^{-1}(p)


def dual_metric(spec: LagrangianSpec, p) -> DualMetric:
    p = np.asarray(p, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonUniqueWarning)
        v = legendre_inverse(spec, p)
    _, _, _, hess = evaluate_many(spec, v[None, :])
    return DualMetric(np.linalg.inv(hess[0]), p, v)


@dataclass(frozen=True)
class DualHessianCheck:
    analytic: np.ndarray
    numeric: np.ndarray
    error: float  # max-norm of the difference, relative to max |analytic|


def dual_hessian_check(spec: LagrangianSpec, p, step: float = 1e-4) -> DualHessianCheck:
    """Compare ``(g_v)^{-1}`` with a finite-difference Hessian of ``H`` at ``p``.

    Every stencil point is inverted from a warm start at ``l^{-1}(p)``; a
    stencil point that cannot be inverted raises :class:`DomainError`.
    """
    try:
        dm = dual_metric(spec, p)
    except ConvergenceError as exc:
        raise DomainError("covector outside the image of the Legendre map", point=p) from exc

    def H(q):
        try:
            return hamiltonian(spec, q, initial_guess=dm.preimage)
        except ConvergenceError as exc:
            raise DomainError("covector outside the image of the Legendre map", point=q) from exc

    numeric = fd_hessian(H, dm.basepoint, step=step * np.linalg.norm(dm.basepoint))
    scale = np.max(np.abs(dm.matrix))
    return DualHessianCheck(dm.matrix, numeric, float(np.max(np.abs(numeric - dm.matrix)) / scale))


# polar cones ------------------------------------------------------------------


@dataclass(frozen=True)
class PolarMembership:
    verdict: str  # TIMELIKE_DUAL, LIGHTLIKE_DUAL or OUTSIDE
    support: float  # max of p(u) over unit causal directions of the cone
    preimage: Optional[np.ndarray]
    preimage_class: Optional[str]
    consistent: bool  # the support test and the inverse-Legendre test agree


def polar_support(atlas: ConeAtlas, component_id: int, P) -> np.ndarray:
    """``max p(u)/|p|`` over the sampled unit causal directions of a timelike cone."""
    U = atlas.causal_points(component_id)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    return np.max(P @ U.T, axis=1) / np.linalg.norm(P, axis=1)


def polar_membership(spec: LagrangianSpec, atlas: ConeAtlas, p, component_id: int,
                     tol: float = 1e-9) -> PolarMembership:
    """Is ``p`` in the polar cone ``{p : p(v) <= 0 for all v in the closed cone}``?

    The verdict comes from the sampled support; the inverse Legendre image is
    used as an independent cross-check: inside the polar cone it must be a
    causal vector of the same cone (timelike for interior covectors,
    lightlike on the boundary).
    """
    p = np.asarray(p, dtype=float)
    support = float(polar_support(atlas, component_id, p)[0])
    inside = support <= tol
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonUniqueWarning)
        try:
            v = legendre_inverse(spec, p)
        except ConvergenceError:
            v = None
    if v is None:
        cls = None
        in_cone = False
    else:
        ok, L = evaluate_many(spec, v[None, :], order=0)
        cls = str(causal_label(2 * L[0], v @ v))
        in_cone = cls != SPACELIKE and atlas.locate(v) == component_id
    if inside:
        verdict = LIGHTLIKE_DUAL if cls == LIGHTLIKE else TIMELIKE_DUAL
    else:
        verdict = OUTSIDE
    return PolarMembership(verdict, support, v, cls, inside == in_cone)


# dual norm --------------------------------------------------------------------


@dataclass(frozen=True)
class DualNormCheck:
    sampled: float  # inf over sampled timelike v with F(v) = 1 of |p(v)|
    closed_form: float  # sqrt(2 |H(p)|)
    relative_gap: float  # (sampled - closed_form) / closed_form
    minimiser: np.ndarray
    used: int  # number of timelike samples


def dual_norm(spec: LagrangianSpec, atlas: Optional[ConeAtlas], p, samples: int = 100_000,
              seed: int = 0, component_id: Optional[int] = None) -> DualNormCheck:
    """Sampled ``inf |p(v)|`` over unit-``F`` timelike vectors versus ``sqrt(2|H(p)|)``.

    With an atlas the infimum runs over the timelike cone whose polar contains
    ``p`` (or ``component_id``); with ``atlas=None`` it runs over every
    timelike direction, which is meaningful for reversible specs only.
    """
    return dual_norm_many(spec, atlas, np.asarray(p, dtype=float)[None, :], samples, seed,
                          component_id)[0]


def dual_norm_many(spec: LagrangianSpec, atlas: Optional[ConeAtlas], P, samples: int = 100_000,
                   seed: int = 0, component_id: Optional[int] = None) -> list:
    """:func:`dual_norm` for several covectors sharing one set of sampled directions."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    U = random_directions(spec.dimension, samples, seed)
    ok, L = evaluate_many(spec, U, order=0)
    timelike = ok & (L < 0)
    U, F = U[timelike], np.sqrt(-2 * L[timelike])
    if atlas is not None:
        where = atlas.locate_many(U)
    elif spec.reversible is False:
        raise ValueError("the cone-wide dual norm needs a reversible spec; pass an atlas")
    out = []
    for p in P:
        keep = np.ones(len(U), dtype=bool)
        if atlas is not None:
            cid = component_id
            if cid is None:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", NonUniqueWarning)
                    cid = atlas.locate(legendre_inverse(spec, p))
            if cid is None or polar_support(atlas, cid, p)[0] > 0:
                raise ValueError("p is not in the interior of a polar cone")
            keep = where == cid
        vals = np.abs(U[keep] @ p) / F[keep]
        k = int(np.argmin(vals))
        closed = float(np.sqrt(2 * abs(hamiltonian(spec, p))))
        out.append(DualNormCheck(float(vals[k]), closed, float((vals[k] - closed) / closed),
                                 U[keep][k] / F[keep][k], int(keep.sum())))
    return out


# Borsuk-Ulam type solvers -------------------------------------------------------


def _hess(spec, v):
    ok, _, grad, hess = evaluate_many(spec, np.asarray(v, dtype=float)[None, :])
    if not ok[0]:
        raise DomainError("outside the domain", point=v)
    return grad[0], hess[0]


@dataclass(frozen=True)
class AntipodalPair:
    v1: np.ndarray
    v2: np.ndarray
    residual: float  # |l(v1) + l(v2)|, relative to |l(w)|


def antipodal_momentum_pair(spec: LagrangianSpec, w, tol: float = SOLVE_TOL) -> AntipodalPair:
    """Vectors ``v1, v2`` with ``v2 - v1 = 2w`` and opposite momenta ``l(v1) = -l(v2)``."""
    if spec.dimension < 3:
        raise ValueError("the antipodal momentum problem needs dimension >= 3")
    w = np.asarray(w, dtype=float)
    scale = np.linalg.norm(legendre(spec, w))

    def system(v1):
        g1, h1 = _hess(spec, v1)
        g2, h2 = _hess(spec, v1 + 2 * w)
        return (g1 + g2) / scale, (h1 + h2) / scale

    v1, res = solve_system(system, -w, tol, "antipodal momentum pair")
    return AntipodalPair(v1, v1 + 2 * w, res)


@dataclass(frozen=True)
class SymmetrizedSolution:
    v: np.ndarray
    residual: float  # |(l(v) - l(-v))/2 - q| / |q|


def symmetrized_legendre_solve(spec: LagrangianSpec, q, tol: float = SOLVE_TOL) -> SymmetrizedSolution:
    """Solve ``(l(v) - l(-v))/2 = q``."""
    q = np.asarray(q, dtype=float)
    scale = np.linalg.norm(q)
    if scale == 0:
        raise ValueError("q must be nonzero")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonUniqueWarning)
        try:
            start = legendre_inverse(spec, q)
        except ConvergenceError as exc:
            start = exc.best

    def system(v):
        g1, h1 = _hess(spec, v)
        g2, h2 = _hess(spec, -v)
        return ((g1 - g2) / 2 - q) / scale, (h1 + h2) / (2 * scale)

    v, res = solve_system(system, start, tol, "symmetrised Legendre equation")
    return SymmetrizedSolution(v, res)


@dataclass(frozen=True)
class AntisymmetryRay:
    v: np.ndarray  # unit vector
    s: float  # l(-v) = -s l(v), s > 0
    residual: float


def antisymmetry_ray(spec: LagrangianSpec, initial=None, candidates: int = 4000, seed: int = 0,
                     tol: float = SOLVE_TOL) -> AntisymmetryRay:
    """A unit ``v`` and ``s > 0`` with ``l(-v) = -s l(v)``.

    A dense scan ranks directions by how nearly ``l(-v)`` and ``-l(v)`` align,
    then Newton polishes the best ones on the system
    ``l(-v) + s l(v) = 0, |v|^2 = 1``.
    """
    d = spec.dimension
    if initial is not None:
        starts = np.atleast_2d(np.asarray(initial, dtype=float))
    else:
        U = random_directions(d, candidates, seed)
        ok_p, Lp = legendre_many(spec, U)
        ok_m, Lm = legendre_many(spec, -U)
        ok = ok_p & ok_m
        U, Lp, Lm = U[ok], Lp[ok], Lm[ok]
        np_, nm = np.linalg.norm(Lp, axis=1), np.linalg.norm(Lm, axis=1)
        good = (np_ > 0) & (nm > 0)
        U, Lp, Lm, np_, nm = U[good], Lp[good], Lm[good], np_[good], nm[good]
        if len(U) == 0:
            raise ConvergenceError("no direction where both v and -v are admissible")
        score = np.linalg.norm(Lm / nm[:, None] + Lp / np_[:, None], axis=1)
        starts = U[np.argsort(score)[:10]]
    best = None
    for u in starts:
        u = u / np.linalg.norm(u)
        lp, lm = legendre(spec, u), legendre(spec, -u)
        s0 = -float(lm @ lp) / float(lp @ lp)
        x0 = np.append(u, s0)

        def system(x):
            v, s = x[:d], x[d]
            gp, hp = _hess(spec, v)
            gm, hm = _hess(spec, -v)
            r = np.append(gm + s * gp, (v @ v - 1) / 2)
            J = np.zeros((d + 1, d + 1))
            J[:d, :d] = -hm + s * hp
            J[:d, d] = gp
            J[d, :d] = v
            return r, J

        try:
            x, res = solve_system(system, x0, tol, "antisymmetry ray")
        except (ConvergenceError, DomainError) as exc:
            if best is None:
                best = exc
            continue
        if x[d] > 0:
            return AntisymmetryRay(x[:d] / np.linalg.norm(x[:d]), float(x[d]), res)
    if isinstance(best, Exception):
        raise best
    raise ConvergenceError("no ray with positive ratio found")
