"""Fundamental tensor and pointwise causal classification.

A :class:`LagrangianSpec` is either one of the built-in formulas or a parsed
expression.  Everything here works on a single vector ``v`` of shape ``(d,)``
or on a batch ``V`` of shape ``(N, d)``; the ``*_many`` helpers return NaN rows
and a validity mask instead of raising when some rows are undefined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import DomainError
from .expr import LagrangianAst, parse, to_text

EPS_SIG = 1e-9  # relative to the largest |eigenvalue|
EPS_CLS = 1e-9  # relative to |v|^2

TIMELIKE = "TIMELIKE"
LIGHTLIKE = "LIGHTLIKE"
SPACELIKE = "SPACELIKE"
HOLE = "HOLE"


@dataclass(frozen=True)
class LagrangianSpec:
    """A Finsler Lagrangian on a single tangent space.

    ``kind`` is one of ``minkowski``, ``beem3``, ``beem2``, ``randers4`` or
    ``dsl``.  ``domain`` is an optional expression that must be strictly
    positive where ``L`` is defined.  ``reversible`` is ``True``, ``False`` or
    ``None`` (unknown).
    """

    kind: str
    dimension: int
    params: tuple = ()
    ast: Optional[LagrangianAst] = None
    domain: Optional[LagrangianAst] = None
    reversible: Optional[bool] = None
    name: str = ""

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be at least 2")
        fixed = {"beem3": 3, "beem2": 2, "randers4": 4}
        if self.kind in fixed and self.dimension != fixed[self.kind]:
            raise ValueError(f"{self.kind} has dimension {fixed[self.kind]}")
        for key, value in self.params:
            if not np.isfinite(value):
                raise ValueError(f"parameter {key} must be finite")
        if self.kind == "randers4" and min(self.p["a"], self.p["b"]) <= 0:
            raise ValueError("randers4 needs a, b > 0")
        if self.kind == "dsl" and self.ast is None:
            raise ValueError("dsl spec needs an expression")

    @property
    def p(self) -> dict:
        return dict(self.params)

    @property
    def n(self) -> int:
        return self.dimension - 1

    def with_params(self, **values) -> "LagrangianSpec":
        merged = {**self.p, **{k: float(v) for k, v in values.items()}}
        ast = self.ast.bind(**values) if self.ast is not None else None
        return LagrangianSpec(self.kind, self.dimension, tuple(sorted(merged.items())), ast,
                              self.domain, self.reversible, self.name)

    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "minkowski":
            return f"minkowski({self.n})"
        args = ", ".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.kind}({args})"

    def text(self) -> Optional[str]:
        """Expression text of ``L``, where one exists."""
        if self.kind == "dsl":
            return to_text(self.ast.root)
        return _BUILTIN_TEXT.get(self.kind, lambda s: None)(self)

    def __call__(self, xs):
        """``L`` on a list of coordinates (floats, arrays or Taylor2)."""
        return _BUILTINS[self.kind](self, xs)


# built-in formulas ----------------------------------------------------------


def _minkowski(spec, xs):
    total = -xs[0] * xs[0]
    for x in xs[1:]:
        total = total + x * x
    return 0.5 * total


def _bump(x, y):
    """``exp(-x/y - y/x)`` for ``x, y >= 0``, exactly 0 when either vanishes."""
    xv, yv = ad.value_of(x), ad.value_of(y)
    live = (xv > 0) & (yv > 0)
    with np.errstate(all="ignore"):
        # past exp(-700) the bump and its derivatives are below double precision
        live &= np.where(live, xv / np.where(live, yv, 1.0) + yv / np.where(live, xv, 1.0), np.inf) < 700
    xs = ad.where(live, x, 1.0)
    ys = ad.where(live, y, 1.0)
    return ad.where(live, ad.exp(-(xs / ys) - ys / xs), 0.0)


def _beem3(spec, xs):
    v0, v1, v2 = xs
    t2 = v0 * v0
    r2 = v1 * v1 + v2 * v2
    return 0.5 * (1.0 - spec.p["alpha"] * _bump(t2, r2)) * (r2 - t2)


def _beem2(spec, xs):
    v0, v1 = xs
    t2, r2 = v0 * v0, v1 * v1
    return 0.5 * (1.0 - spec.p["alpha"] * _bump(t2, r2)) * (r2 - t2)


def _randers4(spec, xs):
    v0, v1, v2, v3 = xs
    a, b = spec.p["a"], spec.p["b"]
    inner = a * ad.sqrt(v0 * v0 - v1 * v1 - v2 * v2 - v3 * v3) + b * v1
    return 0.5 * inner * inner


def _dsl(spec, xs):
    return spec.ast(xs)


_BUILTINS = {
    "minkowski": _minkowski,
    "beem3": _beem3,
    "beem2": _beem2,
    "randers4": _randers4,
    "dsl": _dsl,
}

_BUILTIN_TEXT = {
    "minkowski": lambda s: "0.5*(-v0^2" + "".join(f"+v{i}^2" for i in range(1, s.dimension)) + ")",
    "beem3": lambda s: f"0.5*(1-{s.p['alpha']!r}*exp(-v0^2/(v1^2+v2^2)-(v1^2+v2^2)/v0^2))*(-v0^2+v1^2+v2^2)",
    "beem2": lambda s: f"0.5*(1-{s.p['alpha']!r}*exp(-v0^2/v1^2-v1^2/v0^2))*(-v0^2+v1^2)",
    "randers4": lambda s: f"0.5*({s.p['a']!r}*sqrt(v0^2-v1^2-v2^2-v3^2)+{s.p['b']!r}*v1)^2",
}


def minkowski(n: int) -> LagrangianSpec:
    """Flat ``L = (-v0^2 + v1^2 + ... + vn^2)/2`` in dimension ``n+1``."""
    return LagrangianSpec("minkowski", n + 1, reversible=True)


def beem3(alpha: float = 0.05) -> LagrangianSpec:
    """The non-quadratic reversible 2+1 Lagrangian with a smooth bump factor."""
    return LagrangianSpec("beem3", 3, (("alpha", float(alpha)),), reversible=True)


def beem2(alpha: float = 0.05) -> LagrangianSpec:
    """The 1+1 analogue of :func:`beem3`."""
    return LagrangianSpec("beem2", 2, (("alpha", float(alpha)),), reversible=True)


def randers4(a: float = 1.0, b: float = 1.0) -> LagrangianSpec:
    """Randers-type Lagrangian, defined only inside ``v0^2 > v1^2+v2^2+v3^2``."""
    domain = parse("v0^2-v1^2-v2^2-v3^2", 4)
    return LagrangianSpec("randers4", 4, (("a", float(a)), ("b", float(b))),
                          domain=domain, reversible=False)


def from_expression(text: str, dimension: int, params=None, domain: str | None = None,
                    reversible: Optional[bool] = None, name: str = "") -> LagrangianSpec:
    ast = parse(text, dimension, params)
    dom = parse(domain, dimension, params) if domain else None
    return LagrangianSpec("dsl", dimension, ast.parameters, ast, dom, reversible, name)


# evaluation -----------------------------------------------------------------


def in_domain(spec: LagrangianSpec, V) -> np.ndarray:
    """Boolean mask: nonzero and inside the declared domain."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    ok = np.any(V != 0, axis=1)
    if spec.domain is not None and ok.any():
        vals = np.full(len(V), -np.inf)
        try:
            vals = np.broadcast_to(spec.domain(list(V.T)), (len(V),)).copy()
        except DomainError:
            for i in np.flatnonzero(ok):
                try:
                    vals[i] = float(spec.domain(list(V[i])))
                except DomainError:
                    pass
        ok &= vals > 0
    return ok


def _jet(spec, V, order):
    xs = ad.variables(V) if order else [V[:, i] for i in range(V.shape[1])]
    out = spec(xs)
    n = len(V)
    d = V.shape[1]
    if order:
        if not isinstance(out, ad.Taylor2):
            out = ad.Taylor2(np.broadcast_to(out, (n,)), np.zeros((n, d)), np.zeros((n, d, d)))
        return (np.broadcast_to(out.value, (n,)), np.broadcast_to(out.gradient, (n, d)),
                np.broadcast_to(out.hessian, (n, d, d)))
    return (np.broadcast_to(out, (n,)),)


def evaluate_many(spec: LagrangianSpec, V, order: int = 2):
    """Evaluate ``L`` (and for ``order=2`` its gradient and Hessian) row-wise.

    Returns ``(ok, L)`` or ``(ok, L, grad, hess)``; rows where ``ok`` is false
    are NaN (zero vector, outside the domain, or a domain error in the formula).
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n, d = V.shape
    if d != spec.dimension:
        raise ValueError(f"expected vectors of dimension {spec.dimension}, got {d}")
    ok = in_domain(spec, V)
    L = np.full(n, np.nan)
    grad = np.full((n, d), np.nan)
    hess = np.full((n, d, d), np.nan)
    while ok.any():
        idx = np.flatnonzero(ok)
        try:
            jet = _jet(spec, V[idx], order)
        except DomainError as exc:
            if exc.mask is None or exc.mask.shape != idx.shape:
                # cannot localise: fall back to one row at a time
                for i in idx:
                    try:
                        row = _jet(spec, V[i:i + 1], order)
                    except DomainError:
                        ok[i] = False
                        continue
                    L[i] = row[0][0]
                    if order:
                        grad[i], hess[i] = row[1][0], row[2][0]
                break
            ok[idx[exc.mask]] = False
            continue
        L[idx] = jet[0]
        if order:
            grad[idx], hess[idx] = jet[1], jet[2]
        break
    return (ok, L, grad, hess) if order else (ok, L)


def _single(spec, v, order):
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.dimension,):
        raise ValueError(f"expected a vector of dimension {spec.dimension}")
    if not np.any(v):
        raise DomainError("L is evaluated on nonzero vectors only", point=v)
    if not in_domain(spec, v)[0]:
        raise DomainError("outside the declared domain", point=v)
    try:
        jet = _jet(spec, v[None, :], order)
    except DomainError as exc:
        exc.point = v
        raise
    return [x[0] for x in jet]


def eval_L(spec: LagrangianSpec, v) -> float:
    return float(_single(spec, v, 0)[0])


def gradient_L(spec: LagrangianSpec, v) -> np.ndarray:
    """``dL/dv``, which equals ``g_v v``."""
    return np.array(_single(spec, v, 2)[1])


@dataclass(frozen=True)
class MetricTensor:
    matrix: np.ndarray
    basepoint: np.ndarray
    eigenvalues: np.ndarray
    signature: tuple  # (negative, zero, positive)

    @property
    def degenerate(self) -> bool:
        return self.signature[1] > 0

    @property
    def lorentzian(self) -> bool:
        return self.signature == (1, 0, len(self.eigenvalues) - 1)


def signature_of(eigenvalues, eps: float = EPS_SIG) -> tuple:
    ev = np.asarray(eigenvalues)
    tol = eps * np.max(np.abs(ev), axis=-1, keepdims=True)
    neg = np.sum(ev < -tol, axis=-1)
    pos = np.sum(ev > tol, axis=-1)
    zero = ev.shape[-1] - neg - pos
    return neg, zero, pos


def metric_from_matrix(matrix, basepoint) -> MetricTensor:
    # eigvalsh returns ascending order; ties keep LAPACK's stable order
    ev = np.linalg.eigvalsh(matrix)
    neg, zero, pos = signature_of(ev)
    return MetricTensor(np.asarray(matrix), np.asarray(basepoint, dtype=float), ev,
                        (int(neg), int(zero), int(pos)))


def metric_at(spec: LagrangianSpec, v) -> MetricTensor:
    """Fundamental tensor ``g_v`` (Hessian of ``L``) with its signature."""
    _, _, hess = _single(spec, v, 2)
    return metric_from_matrix(np.array(hess), v)


@dataclass(frozen=True)
class CausalClass:
    label: str
    quadratic_value: float  # g_v(v, v) = 2 L(v)


def causal_label(two_L, norm2, eps: float = EPS_CLS):
    """Vectorised TIMELIKE / LIGHTLIKE / SPACELIKE labels from ``2L`` and ``|v|^2``."""
    two_L = np.asarray(two_L, dtype=float)
    band = eps * np.asarray(norm2, dtype=float)
    return np.where(two_L < -band, TIMELIKE, np.where(two_L > band, SPACELIKE, LIGHTLIKE))


def classify(spec: LagrangianSpec, v) -> CausalClass:
    v = np.asarray(v, dtype=float)
    q = 2.0 * eval_L(spec, v)
    return CausalClass(str(causal_label(q, v @ v)), q)


def classify_many(spec: LagrangianSpec, V):
    """Labels (with ``HOLE`` for undefined rows) and the values ``2L``."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    ok, L = evaluate_many(spec, V, order=0)
    labels = causal_label(2 * np.where(ok, L, 0.0), np.einsum("ij,ij->i", V, V)).astype(object)
    labels[~ok] = HOLE
    return labels, 2 * L


# direction-dependent metric fields that need not come from a Lagrangian ------


@dataclass(frozen=True)
class HopfMetricField:
    """``dr^2 + r^2 (-(dpsi - cos(theta) dphi)^2 + dtheta^2 + sin^2(theta) dphi^2)`` on R^4.

    Hopf chart: ``v0 + i v1 = r cos(theta/2) e^{i(psi-phi)/2}`` and
    ``v2 + i v3 = r sin(theta/2) e^{i(psi+phi)/2}``.  The metric is Lorentzian
    and 0-homogeneous, and ``g_v(v, v) = |v|^2``, yet it is not the Hessian of
    any Lagrangian.  Singular where either complex coordinate vanishes.
    """

    dimension: int = 4
    name: str = "hopf4"

    def metric(self, V) -> np.ndarray:
        V = np.asarray(V, dtype=float)
        single = V.ndim == 1
        V = np.atleast_2d(V)
        a, b, c, e = V.T
        r2 = np.einsum("ij,ij->i", V, V)
        r = np.sqrt(r2)
        rho1s, rho2s = a * a + b * b, c * c + e * e
        if np.any(rho1s == 0) or np.any(rho2s == 0):
            raise DomainError("Hopf chart is singular on the coordinate planes")
        rho1, rho2 = np.sqrt(rho1s), np.sqrt(rho2s)
        zero = np.zeros_like(a)
        dr = V / r[:, None]
        drho1 = np.stack([a, b, zero, zero], axis=1) / rho1[:, None]
        drho2 = np.stack([zero, zero, c, e], axis=1) / rho2[:, None]
        dtheta = 2 * (rho1[:, None] * drho2 - rho2[:, None] * drho1) / r2[:, None]
        darg1 = np.stack([-b, a, zero, zero], axis=1) / rho1s[:, None]
        darg2 = np.stack([zero, zero, -e, c], axis=1) / rho2s[:, None]
        dpsi = darg1 + darg2
        dphi = darg2 - darg1
        cos_t = (rho1s - rho2s) / r2
        sin_t = 2 * rho1 * rho2 / r2
        sigma = dpsi - cos_t[:, None] * dphi

        def outer(x, y=None):
            y = x if y is None else y
            return x[:, :, None] * y[:, None, :]

        g = outer(dr) + r2[:, None, None] * (
            -outer(sigma) + outer(dtheta) + (sin_t**2)[:, None, None] * outer(dphi)
        )
        return g[0] if single else g


HOPF4 = HopfMetricField()


def _metric_fn(source):
    if isinstance(source, HopfMetricField):
        return source.metric
    return lambda v: np.array(_single(source, v, 2)[2])


def euler_residuals(source, v, step: float = 1e-4) -> tuple:
    """Residuals of the homogeneity identities at ``v``.

    (i)  ``|dL/dv - g_v v| / |v|`` with ``L = g_v(v, v)/2``;
    (ii) ``|(d g_{mu nu} / d v^a) v^nu|``;
    (iii) ``|(d g_{mu nu} / d v^a) v^a|``.
    Metric derivatives are central differences with step ``step * |v|``.
    """
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    gfun = _metric_fn(source)
    g = gfun(v)
    h = step * norm
    d = v.size
    dg = np.empty((d, d, d))  # dg[a] = d g / d v^a
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        dg[k] = (gfun(v + e) - gfun(v - e)) / (2 * h)
    if isinstance(source, HopfMetricField):
        grad = ad.fd_gradient(lambda x: 0.5 * x @ gfun(x) @ x, v, step=h)
    else:
        grad = gradient_L(source, v)
    res1 = np.linalg.norm(grad - g @ v) / norm
    res2 = np.linalg.norm(np.einsum("amn,n->ma", dg, v))
    res3 = np.linalg.norm(np.einsum("amn,a->mn", dg, v))
    return float(res1), float(res2), float(res3)


# Beem validity --------------------------------------------------------------


@dataclass(frozen=True)
class ValidityVerdict:
    kind: str  # VALID_LORENTZ_FINSLER | DOMAIN_WITNESS | DEGENERATE_WITNESS | SIGNATURE_WITNESS
    witness: Optional[np.ndarray] = None
    samples: int = 0
    detail: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.kind == "VALID_LORENTZ_FINSLER"


def random_directions(dimension: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((count, dimension))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def beem_validity_scan(spec: LagrangianSpec, samples: int = 4000, seed: int = 0,
                       points=None) -> ValidityVerdict:
    """Scan unit directions; VALID iff every one evaluates with signature (1, 0, n)."""
    if points is None:
        if samples < 1:
            raise ValueError("samples must be >= 1")
        points = random_directions(spec.dimension, samples, seed)
    points = np.atleast_2d(points)
    ok, _, _, hess = evaluate_many(spec, points)
    if not ok.all():
        i = int(np.flatnonzero(~ok)[0])
        return ValidityVerdict("DOMAIN_WITNESS", points[i], len(points))
    ev = np.linalg.eigvalsh(hess)
    neg, zero, pos = signature_of(ev)
    if np.any(zero > 0):
        i = int(np.flatnonzero(zero > 0)[0])
        return ValidityVerdict("DEGENERATE_WITNESS", points[i], len(points),
                               {"eigenvalues": ev[i].tolist()})
    bad = (neg != 1) | (pos != spec.dimension - 1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        return ValidityVerdict("SIGNATURE_WITNESS", points[i], len(points),
                               {"eigenvalues": ev[i].tolist()})
    spread = np.abs(ev)
    return ValidityVerdict("VALID_LORENTZ_FINSLER", None, len(points),
                           {"min_abs_eigenvalue": float(spread.min())})


def certify_parameter(family, lo: float, hi: float, samples: int = 4000, seed: int = 0,
                      rel_tol: float = 1e-3, points=None) -> float:
    """Largest parameter (up to ``rel_tol``) for which ``family(t)`` is scan-valid.

    Assumes ``family(lo)`` is valid; ``hi`` is doubled until the scan fails.
    """
    dim = family(lo).dimension
    if points is None:
        points = random_directions(dim, samples, seed)
    if not beem_validity_scan(family(lo), points=points).valid:
        raise ValueError(f"family is not valid at the lower end {lo}")
    for _ in range(30):
        if not beem_validity_scan(family(hi), points=points).valid:
            break
        lo, hi = hi, 2 * hi
    else:
        return float("inf")
    while hi - lo > rel_tol * max(abs(hi), 1e-12):
        mid = 0.5 * (lo + hi)
        if beem_validity_scan(family(mid), points=points).valid:
            lo = mid
        else:
            hi = mid
    return lo
