"""Second-order forward-mode differentiation by truncated Taylor arithmetic.

A :class:`Taylor2` carries the value, gradient and Hessian of a scalar
function of ``d`` variables.  All three slots may carry leading batch
dimensions, so one pass of ordinary numpy broadcasting differentiates the
same expression at many points::

    >>> import numpy as np
    >>> x, y = variables(np.array([3.0, 4.0]))
    >>> f = x * x * y
    >>> float(f.value), f.gradient.tolist()
    (36.0, [24.0, 9.0])

Hessians are exactly symmetric: every update is built from symmetric pieces
(``g_a g_b^T + g_b g_a^T`` and ``g g^T``), so no symmetrization pass is
needed.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

# exp(x) for x below this is treated as exactly zero with zero derivatives
EXP_UNDERFLOW = -700.0


class DomainError(ValueError):
    """A function was evaluated outside its domain.

    ``mask`` flags the offending batch entries (``None`` for scalar
    evaluation), ``point`` holds a witness input when the caller knows it and
    ``expression`` names the sub-expression that failed.
    """

    def __init__(self, message, mask=None, point=None, expression=None):
        super().__init__(message)
        self.mask = None if mask is None else np.asarray(mask, dtype=bool)
        self.point = point
        self.expression = expression

    def __str__(self):
        text = super().__str__()
        if self.expression is not None:
            text += f" in `{self.expression}`"
        if self.point is not None:
            text += f" at v={np.asarray(self.point).tolist()}"
        return text


def _require(ok, message):
    ok = np.asarray(ok, dtype=bool)
    if not ok.all():
        raise DomainError(message, mask=None if ok.ndim == 0 else ~ok)


class Taylor2:
    """Value, gradient and Hessian of a scalar quantity.

    ``value`` has batch shape ``B``, ``gradient`` has shape ``B + (d,)`` and
    ``hessian`` has shape ``B + (d, d)``.
    """

    __slots__ = ("value", "gradient", "hessian")
    __array_ufunc__ = None

    def __init__(self, value, gradient, hessian):
        self.value = np.asarray(value, dtype=float)
        self.gradient = np.asarray(gradient, dtype=float)
        self.hessian = np.asarray(hessian, dtype=float)

    @property
    def dim(self) -> int:
        return self.gradient.shape[-1]

    def __repr__(self):
        return f"Taylor2(value={self.value!r}, gradient={self.gradient!r}, hessian={self.hessian!r})"

    def _coerce(self, other):
        if isinstance(other, Taylor2):
            return other
        c = np.asarray(other, dtype=float)
        d = self.dim
        return Taylor2(c, np.zeros(c.shape + (d,)), np.zeros(c.shape + (d, d)))

    # arithmetic -----------------------------------------------------------

    def __neg__(self):
        return Taylor2(-self.value, -self.gradient, -self.hessian)

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Taylor2):
            c = np.asarray(other, dtype=float)
            shape = np.broadcast_shapes(self.value.shape, c.shape)
            return Taylor2(
                self.value + c,
                np.broadcast_to(self.gradient, shape + (self.dim,)),
                np.broadcast_to(self.hessian, shape + (self.dim, self.dim)),
            )
        return Taylor2(
            self.value + other.value,
            self.gradient + other.gradient,
            self.hessian + other.hessian,
        )

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, Taylor2):
            c = np.asarray(other, dtype=float)
            return Taylor2(
                self.value * c,
                self.gradient * c[..., None],
                self.hessian * c[..., None, None],
            )
        a, b = self, other
        ga, gb = a.gradient, b.gradient
        cross = ga[..., :, None] * gb[..., None, :]
        return Taylor2(
            a.value * b.value,
            ga * b.value[..., None] + gb * a.value[..., None],
            a.hessian * b.value[..., None, None]
            + b.hessian * a.value[..., None, None]
            + (cross + np.swapaxes(cross, -1, -2)),
        )

    __rmul__ = __mul__

    def reciprocal(self):
        _require(self.value != 0, "division by zero")
        u = self.value
        return self._unary(1.0 / u, -1.0 / u**2, 2.0 / u**3)

    def __truediv__(self, other):
        if not isinstance(other, Taylor2):
            c = np.asarray(other, dtype=float)
            _require(c != 0, "division by zero")
            return self * (1.0 / c)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, Taylor2):
            return (exponent * self.log()).exp()
        q = float(exponent)
        if q.is_integer() and abs(q) <= 64:
            n = int(q)
            if n == 0:
                return self._coerce(np.ones_like(self.value))
            if n < 0:
                return self.reciprocal() ** (-n)
            return _integer_power(self, n)
        _require(self.value > 0, "non-integer power of a non-positive base")
        return (self.log() * q).exp()

    def __rpow__(self, base):
        b = np.asarray(base, dtype=float)
        _require(b > 0, "power of a non-positive base")
        return (self * np.log(b)).exp()

    # elementary functions -------------------------------------------------

    def _unary(self, f0, f1, f2):
        """Chain rule for ``f(self)`` given ``f``, ``f'`` and ``f''`` at the value."""
        f1 = np.asarray(f1, dtype=float)
        f2 = np.asarray(f2, dtype=float)
        g = self.gradient
        return Taylor2(
            f0,
            g * f1[..., None],
            self.hessian * f1[..., None, None]
            + (g[..., :, None] * g[..., None, :]) * f2[..., None, None],
        )

    def sqrt(self):
        _require(self.value > 0, "sqrt of a non-positive value")
        r = np.sqrt(self.value)
        return self._unary(r, 0.5 / r, -0.25 / (r * self.value))

    def exp(self):
        u = self.value
        live = u >= EXP_UNDERFLOW
        e = np.where(live, np.exp(np.where(live, u, 0.0)), 0.0)
        out = self._unary(e, e, e)
        # zero out derivatives outright so 0 * inf cannot leak NaNs
        if not np.all(live):
            out.gradient = np.where(live[..., None], out.gradient, 0.0)
            out.hessian = np.where(live[..., None, None], out.hessian, 0.0)
        return out

    def log(self):
        _require(self.value > 0, "log of a non-positive value")
        u = self.value
        return self._unary(np.log(u), 1.0 / u, -1.0 / u**2)

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self._unary(s, c, -s)

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self._unary(c, -s, -c)


def _integer_power(x: Taylor2, n: int) -> Taylor2:
    result = None
    base = x
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return result


def lift(v, index: int) -> Taylor2:
    """Seed variable ``index`` of the point ``v`` (shape ``(d,)`` or ``(..., d)``)."""
    v = np.asarray(v, dtype=float)
    d = v.shape[-1]
    if not 0 <= index < d:
        raise IndexError(f"index {index} out of range for dimension {d}")
    batch = v.shape[:-1]
    grad = np.zeros(batch + (d,))
    grad[..., index] = 1.0
    return Taylor2(v[..., index].copy(), grad, np.zeros(batch + (d, d)))


def variables(v) -> list[Taylor2]:
    """All ``d`` seeded coordinates of ``v``."""
    v = np.asarray(v, dtype=float)
    return [lift(v, i) for i in range(v.shape[-1])]


# generic elementary functions: accept Taylor2 or plain floats/arrays


def sqrt(x):
    if isinstance(x, Taylor2):
        return x.sqrt()
    x = np.asarray(x, dtype=float)
    _require(x > 0, "sqrt of a non-positive value")
    return np.sqrt(x)


def exp(x):
    if isinstance(x, Taylor2):
        return x.exp()
    x = np.asarray(x, dtype=float)
    return np.where(x >= EXP_UNDERFLOW, np.exp(np.maximum(x, EXP_UNDERFLOW)), 0.0)


def log(x):
    if isinstance(x, Taylor2):
        return x.log()
    x = np.asarray(x, dtype=float)
    _require(x > 0, "log of a non-positive value")
    return np.log(x)


def sin(x):
    return x.sin() if isinstance(x, Taylor2) else np.sin(np.asarray(x, dtype=float))


def cos(x):
    return x.cos() if isinstance(x, Taylor2) else np.cos(np.asarray(x, dtype=float))


def power(x, q):
    """``x ** q`` with the domain rules of :meth:`Taylor2.__pow__`."""
    if isinstance(x, Taylor2) or isinstance(q, Taylor2):
        return x**q
    x = np.asarray(x, dtype=float)
    qf = float(q)
    if qf.is_integer():
        if qf < 0:
            _require(x != 0, "division by zero")
        return x**qf
    _require(x > 0, "non-integer power of a non-positive base")
    return x**qf


def divide(a, b):
    if isinstance(a, Taylor2) or isinstance(b, Taylor2):
        return a / b
    b = np.asarray(b, dtype=float)
    _require(b != 0, "division by zero")
    return np.asarray(a, dtype=float) / b


def where(mask, a, b):
    """Select ``a`` where ``mask`` holds, else ``b``, slot by slot."""
    mask = np.asarray(mask, dtype=bool)
    if not isinstance(a, Taylor2) and not isinstance(b, Taylor2):
        return np.where(mask, a, b)
    proto = a if isinstance(a, Taylor2) else b
    a, b = proto._coerce(a), proto._coerce(b)
    return Taylor2(
        np.where(mask, a.value, b.value),
        np.where(mask[..., None], a.gradient, b.gradient),
        np.where(mask[..., None, None], a.hessian, b.hessian),
    )


def value_of(x):
    return x.value if isinstance(x, Taylor2) else np.asarray(x, dtype=float)


def derivatives(f: Callable[[list], object], v):
    """Evaluate ``f`` on seeded coordinates; return ``(value, gradient, hessian)``."""
    v = np.asarray(v, dtype=float)
    out = f(variables(v))
    if not isinstance(out, Taylor2):
        # f ignored its inputs: constant function
        c = np.broadcast_to(np.asarray(out, dtype=float), v.shape[:-1])
        d = v.shape[-1]
        return c, np.zeros(c.shape + (d,)), np.zeros(c.shape + (d, d))
    shape = v.shape[:-1]
    d = v.shape[-1]
    return (
        np.broadcast_to(out.value, shape).copy(),
        np.broadcast_to(out.gradient, shape + (d,)).copy(),
        np.broadcast_to(out.hessian, shape + (d, d)).copy(),
    )


# finite-difference oracles ------------------------------------------------


def _probe(f, point):
    try:
        return float(f(point))
    except DomainError as exc:
        raise DomainError("function undefined on the stencil", point=point) from exc


def fd_gradient(f: Callable, v, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of one point."""
    if step <= 0:
        raise ValueError("step must be positive")
    v = np.asarray(v, dtype=float)
    d = v.size
    out = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        out[i] = (_probe(f, v + e) - _probe(f, v - e)) / (2 * step)
    return out


def fd_hessian(f: Callable, v, step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian; diagonal from the 3-point rule, off-diagonal from the 4-point stencil."""
    if step <= 0:
        raise ValueError("step must be positive")
    v = np.asarray(v, dtype=float)
    d = v.size
    h = step
    f0 = _probe(f, v)
    H = np.empty((d, d))
    eye = np.eye(d) * h
    for i in range(d):
        H[i, i] = (_probe(f, v + eye[i]) - 2 * f0 + _probe(f, v - eye[i])) / h**2
        for j in range(i + 1, d):
            pp = _probe(f, v + eye[i] + eye[j])
            pm = _probe(f, v + eye[i] - eye[j])
            mp = _probe(f, v - eye[i] + eye[j])
            mm = _probe(f, v - eye[i] - eye[j])
            H[i, j] = H[j, i] = (pp - pm - mp + mm) / (4 * h * h)
    return H

