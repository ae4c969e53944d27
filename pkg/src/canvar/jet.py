"""Truncated multivariate Taylor arithmetic for exact forward-mode derivatives.

A :class:`Jet` carries a value together with its gradient and (optionally)
its Hessian with respect to a fixed set of seed variables.  Arithmetic and the
elementary functions below propagate both orders by the chain rule, so any
metric or field written with these functions can be differentiated twice to
machine precision by evaluating it once on seeded jets.

The elementary functions dispatch on argument type: jets, ``mpmath`` numbers
and plain floats/arrays all work, which lets a single component function serve
forward-mode differentiation, extended-precision quadrature and plain
evaluation.
"""

from __future__ import annotations

import math
from typing import Any, Callable, Sequence

import numpy as np

try:  # mpmath is a hard dependency, but keep the dispatch cheap
    import mpmath
    _MP_TYPES: tuple = (mpmath.mpf,)
except ImportError:  # pragma: no cover
    mpmath = None
    _MP_TYPES = ()


class Jet:
    """Second (or first) order truncated Taylor expansion ``v + d.h + h.dd.h/2``."""

    __slots__ = ("v", "d", "dd")
    __array_priority__ = 1000.0

    def __init__(self, v: float, d: np.ndarray, dd: np.ndarray | None = None):
        self.v = v
        self.d = d
        self.dd = dd

    @property
    def order(self) -> int:
        return 1 if self.dd is None else 2

    @classmethod
    def variables(cls, point: Sequence[float], order: int = 2) -> list["Jet"]:
        n = len(point)
        eye = np.eye(n)
        zero = np.zeros((n, n)) if order >= 2 else None
        return [cls(float(point[i]), eye[i], zero) for i in range(n)]

    def __repr__(self) -> str:
        return f"Jet({self.v!r}, d={self.d!r})"

    # arithmetic ---------------------------------------------------------
    def __add__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return Jet(self.v + other.v, self.d + other.d, _add_dd(self.dd, other.dd))
        return Jet(self.v + other, self.d, self.dd)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return Jet(self.v - other.v, self.d - other.d, _sub_dd(self.dd, other.dd))
        return Jet(self.v - other, self.d, self.dd)

    def __rsub__(self, other: Any) -> "Jet":
        return Jet(other - self.v, -self.d, None if self.dd is None else -self.dd)

    def __neg__(self) -> "Jet":
        return Jet(-self.v, -self.d, None if self.dd is None else -self.dd)

    def __pos__(self) -> "Jet":
        return self

    def __mul__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            a, b = self, other
            d = a.d * b.v + b.d * a.v
            if a.dd is None or b.dd is None:
                return Jet(a.v * b.v, d)
            outer = np.outer(a.d, b.d)
            return Jet(a.v * b.v, d, a.dd * b.v + b.dd * a.v + outer + outer.T)
        return Jet(self.v * other, self.d * other, None if self.dd is None else self.dd * other)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return self * other._reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other: Any) -> "Jet":
        return self._reciprocal() * other

    def _reciprocal(self) -> "Jet":
        r = 1.0 / self.v
        return _chain(self, r, -r * r, 2.0 * r * r * r)

    def __pow__(self, p: Any) -> "Jet":
        if isinstance(p, Jet):
            return exp(p * log(self))
        if isinstance(p, int) and p >= 0:
            if p == 0:
                return Jet(1.0, np.zeros_like(self.d), None if self.dd is None else np.zeros_like(self.dd))
            out = self
            for _ in range(p - 1):
                out = out * self
            return out
        v = self.v
        return _chain(self, v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def __rpow__(self, base: Any) -> "Jet":
        return exp(self * math.log(base))

    # ordering compares values only (used for branch selection in components)
    def __lt__(self, other: Any) -> bool:
        return self.v < value_of(other)

    def __gt__(self, other: Any) -> bool:
        return self.v > value_of(other)

    def __le__(self, other: Any) -> bool:
        return self.v <= value_of(other)

    def __ge__(self, other: Any) -> bool:
        return self.v >= value_of(other)


def _add_dd(a, b):
    if a is None or b is None:
        return None
    return a + b


def _sub_dd(a, b):
    if a is None or b is None:
        return None
    return a - b


def _chain(a: Jet, f0: float, f1: float, f2: float) -> Jet:
    d = f1 * a.d
    if a.dd is None:
        return Jet(f0, d)
    return Jet(f0, d, f1 * a.dd + f2 * np.outer(a.d, a.d))


def value_of(x: Any) -> Any:
    return x.v if isinstance(x, Jet) else x


def _is_mp(x: Any) -> bool:
    return bool(_MP_TYPES) and isinstance(x, _MP_TYPES)


def _unary(name: str, jet_rule: Callable[[float], tuple[float, float, float]],
           float_fn: Callable, np_fn: Callable) -> Callable:
    def fn(x):
        if isinstance(x, Jet):
            return _chain(x, *jet_rule(x.v))
        if isinstance(x, (float, int)):
            return float_fn(x)
        if _is_mp(x):
            return getattr(mpmath, name)(x)
        return np_fn(x)

    fn.__name__ = name
    return fn


def _exp_rule(v):
    e = math.exp(v)
    return e, e, e


def _log_rule(v):
    return math.log(v), 1.0 / v, -1.0 / (v * v)


def _sqrt_rule(v):
    s = math.sqrt(v)
    return s, 0.5 / s, -0.25 / (s * v)


def _sin_rule(v):
    s, c = math.sin(v), math.cos(v)
    return s, c, -s


def _cos_rule(v):
    s, c = math.sin(v), math.cos(v)
    return c, -s, -c


def _tan_rule(v):
    t = math.tan(v)
    sec2 = 1.0 + t * t
    return t, sec2, 2.0 * t * sec2


def _sinh_rule(v):
    s, c = math.sinh(v), math.cosh(v)
    return s, c, s


def _cosh_rule(v):
    s, c = math.sinh(v), math.cosh(v)
    return c, s, c


def _tanh_rule(v):
    t = math.tanh(v)
    s = 1.0 - t * t
    return t, s, -2.0 * t * s


def _atan_rule(v):
    r = 1.0 / (1.0 + v * v)
    return math.atan(v), r, -2.0 * v * r * r


exp = _unary("exp", _exp_rule, math.exp, np.exp)
log = _unary("log", _log_rule, math.log, np.log)
sqrt = _unary("sqrt", _sqrt_rule, math.sqrt, np.sqrt)
sin = _unary("sin", _sin_rule, math.sin, np.sin)
cos = _unary("cos", _cos_rule, math.cos, np.cos)
tan = _unary("tan", _tan_rule, math.tan, np.tan)
sinh = _unary("sinh", _sinh_rule, math.sinh, np.sinh)
cosh = _unary("cosh", _cosh_rule, math.cosh, np.cosh)
tanh = _unary("tanh", _tanh_rule, math.tanh, np.tanh)
atan = _unary("atan", _atan_rule, math.atan, np.arctan)


def unpack(values: Any, nvars: int, order: int = 2) -> tuple[np.ndarray, ...]:
    """Split a nested structure of jets/constants into value and derivative arrays.

    Returns ``(v, d)`` or ``(v, d, dd)``; derivative axes are appended last, so
    for a metric ``d[i, j, k] = ∂_k g_ij``.
    """
    arr = np.asarray(values, dtype=object)
    shape = arr.shape
    flat = arr.reshape(-1)
    v = np.empty(flat.size)
    d = np.zeros((flat.size, nvars))
    dd = np.zeros((flat.size, nvars, nvars)) if order >= 2 else None
    for idx, x in enumerate(flat):
        if isinstance(x, Jet):
            v[idx] = x.v
            d[idx] = x.d
            if dd is not None:
                if x.dd is None:
                    raise ValueError("first-order jet where a second-order one is required")
                dd[idx] = x.dd
        else:
            v[idx] = float(x)
    out = (v.reshape(shape), d.reshape(shape + (nvars,)))
    if dd is not None:
        out = out + (dd.reshape(shape + (nvars, nvars)),)
    return out
