"""Forward-mode differentiation: hyper-dual numbers for exact first and second partials.

Two carriers are provided:

* :class:`HyperDual` -- ``re + e1*E1 + e2*E2 + e12*E1E2`` with ``E1**2 = E2**2 = 0``.
  Seeding ``E1`` along ``e_i`` and ``E2`` along ``e_j`` yields the mixed partial
  ``d2f/dq_i dq_j`` in the ``e12`` slot.
* :class:`Dual` -- a first-order tangent ``v + d*E``.  Its components may themselves be
  hyper-duals, which is how tangent maps (pushforwards) are pushed through fields that are
  later differentiated twice.

Components may be Python floats or numpy arrays; all operations broadcast, so one pass can
carry a whole batch of seeds and sample points.  The primitive functions at module level
(``exp``, ``log``, ``sqrt``, ...) accept reals, arrays, ``HyperDual`` and ``Dual`` alike and
raise :class:`~homlag.errors.DomainError` instead of producing NaN.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from homlag.errors import DimensionError, DomainError, NumericError, NumericWarning

_REAL = (int, float, np.ndarray, np.number)


def _is_real(x) -> bool:
    return isinstance(x, _REAL)


def _guard(bad, message: str) -> None:
    if bad is True or (bad is not False and bad.any()):
        raise DomainError(message)


class HyperDual:
    __slots__ = ("re", "e1", "e2", "e12")
    __array_ufunc__ = None

    def __init__(self, re, e1=0.0, e2=0.0, e12=0.0):
        self.re = re
        self.e1 = e1
        self.e2 = e2
        self.e12 = e12

    def components(self):
        return self.re, self.e1, self.e2, self.e12

    def __repr__(self):
        return f"HyperDual(re={self.re!r}, e1={self.e1!r}, e2={self.e2!r}, e12={self.e12!r})"

    def _chain(self, f0, f1, f2) -> "HyperDual":
        return HyperDual(
            f0, f1 * self.e1, f1 * self.e2, f1 * self.e12 + f2 * self.e1 * self.e2
        )

    def __neg__(self):
        return HyperDual(-self.re, -self.e1, -self.e2, -self.e12)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, HyperDual):
            return HyperDual(
                self.re + other.re,
                self.e1 + other.e1,
                self.e2 + other.e2,
                self.e12 + other.e12,
            )
        if _is_real(other):
            return HyperDual(self.re + other, self.e1, self.e2, self.e12)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, HyperDual) or _is_real(other):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if _is_real(other):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, HyperDual):
            return HyperDual(
                self.re * other.re,
                self.re * other.e1 + self.e1 * other.re,
                self.re * other.e2 + self.e2 * other.re,
                self.re * other.e12
                + self.e1 * other.e2
                + self.e2 * other.e1
                + self.e12 * other.re,
            )
        if _is_real(other):
            return HyperDual(
                self.re * other, self.e1 * other, self.e2 * other, self.e12 * other
            )
        return NotImplemented

    __rmul__ = __mul__

    def reciprocal(self) -> "HyperDual":
        _guard(np.asarray(self.re) == 0.0, "division by zero")
        r = 1.0 / self.re
        return self._chain(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other):
        if isinstance(other, HyperDual):
            return self * other.reciprocal()
        if _is_real(other):
            _guard(np.asarray(other) == 0.0, "division by zero")
            return self * (1.0 / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if _is_real(other):
            return self.reciprocal() * other
        return NotImplemented

    def __pow__(self, p):
        return power(self, p)

    def __rpow__(self, base):
        return power(base, self)


class Dual:
    """First-order tangent ``v + d*E``; ``v`` and ``d`` may be reals, arrays or HyperDuals."""

    __slots__ = ("v", "d")
    __array_ufunc__ = None

    def __init__(self, v, d=0.0):
        self.v = v
        self.d = d

    def __repr__(self):
        return f"Dual(v={self.v!r}, d={self.d!r})"

    def __neg__(self):
        return Dual(-self.v, -self.d)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.v + other.v, self.d + other.d)
        return Dual(self.v + other, self.d)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.v * other.v, self.v * other.d + self.d * other.v)
        return Dual(self.v * other, self.d * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = divide(self.v, other.v)
            return Dual(q, divide(self.d - q * other.d, other.v))
        return Dual(divide(self.v, other), divide(self.d, other))

    def __rtruediv__(self, other):
        q = divide(other, self.v)
        return Dual(q, divide(-q * self.d, self.v))

    def __pow__(self, p):
        return power(self, p)

    def __rpow__(self, base):
        return power(base, self)


def divide(a, b):
    """Quotient with a zero-denominator guard for every carrier type."""
    if isinstance(a, Dual) or isinstance(b, Dual):
        return (a if isinstance(a, Dual) else Dual(a)) / b
    if isinstance(a, HyperDual) or isinstance(b, HyperDual):
        return a / b
    _guard(np.asarray(b) == 0.0, "division by zero")
    return np.true_divide(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else a / b


def _unary(name, real_fn, d1, d2, domain=None):
    """Build a polymorphic primitive from its value, first and second derivative rules."""

    def prim(u):
        if isinstance(u, Dual):
            return Dual(prim(u.v), d1(u.v) * u.d)
        if isinstance(u, HyperDual):
            return u._chain(prim(u.re), d1(u.re), d2(u.re))
        if domain is not None:
            _guard(domain(np.asarray(u)), f"{name} evaluated outside its domain")
        return real_fn(u)

    prim.__name__ = name
    return prim


exp = _unary("exp", np.exp, lambda u: exp(u), lambda u: exp(u))
log = _unary(
    "log", np.log, lambda u: divide(1.0, u), lambda u: -divide(1.0, u * u), lambda a: a <= 0.0
)
sqrt = _unary(
    "sqrt",
    np.sqrt,
    lambda u: divide(0.5, sqrt(u)),
    lambda u: divide(-0.25, u * sqrt(u)),
    lambda a: a < 0.0,
)
sin = _unary("sin", np.sin, lambda u: cos(u), lambda u: -sin(u))
cos = _unary("cos", np.cos, lambda u: -sin(u), lambda u: -cos(u))
tan = _unary(
    "tan",
    np.tan,
    lambda u: 1.0 + tan(u) * tan(u),
    lambda u: 2.0 * tan(u) * (1.0 + tan(u) * tan(u)),
)
arctan = _unary(
    "arctan",
    np.arctan,
    lambda u: divide(1.0, 1.0 + u * u),
    lambda u: divide(-2.0 * u, (1.0 + u * u) * (1.0 + u * u)),
)


def arctan2(y, x):
    """Two-argument arctangent ``atan2(y, x)``; undefined at the origin."""
    if isinstance(y, Dual) or isinstance(x, Dual):
        y = y if isinstance(y, Dual) else Dual(y)
        x = x if isinstance(x, Dual) else Dual(x)
        r2 = x.v * x.v + y.v * y.v
        return Dual(arctan2(y.v, x.v), divide(x.v * y.d - y.v * x.d, r2))
    if isinstance(y, HyperDual) or isinstance(x, HyperDual):
        y = y if isinstance(y, HyperDual) else HyperDual(y)
        x = x if isinstance(x, HyperDual) else HyperDual(x)
        r2 = x.re * x.re + y.re * y.re
        _guard(np.asarray(r2) == 0.0, "arctan2 evaluated at the origin")
        fx, fy = -y.re / r2, x.re / r2
        fxx = 2.0 * x.re * y.re / (r2 * r2)
        fyy = -fxx
        fxy = (y.re * y.re - x.re * x.re) / (r2 * r2)
        return HyperDual(
            np.arctan2(y.re, x.re),
            fx * x.e1 + fy * y.e1,
            fx * x.e2 + fy * y.e2,
            fx * x.e12
            + fy * y.e12
            + fxx * x.e1 * x.e2
            + fxy * (x.e1 * y.e2 + y.e1 * x.e2)
            + fyy * y.e1 * y.e2,
        )
    _guard((np.asarray(x) == 0.0) & (np.asarray(y) == 0.0), "arctan2 evaluated at the origin")
    return np.arctan2(y, x)


def power(u, p):
    """``u ** p``; a non-real exponent goes through ``exp(p*log(u))``."""
    if not _is_real(p):
        return exp(p * log(u))
    p = float(p)
    integral = p.is_integer()
    if isinstance(u, Dual):
        if p == 0.0:
            return Dual(power(u.v, 0.0), 0.0 * u.d)
        return Dual(power(u.v, p), p * power(u.v, p - 1.0) * u.d)
    if isinstance(u, HyperDual):
        f0 = power(u.re, p)
        f1 = p * power(u.re, p - 1.0) if p != 0.0 else 0.0
        f2 = p * (p - 1.0) * power(u.re, p - 2.0) if p not in (0.0, 1.0) else 0.0
        return u._chain(f0, f1, f2)
    a = np.asarray(u, dtype=float)
    if not integral:
        _guard(a < 0.0, "non-integer power of a negative number")
    if p < 0.0:
        _guard(a == 0.0, "negative power of zero")
    return np.power(u, p) if isinstance(u, np.ndarray) else float(a) ** p


@dataclass(frozen=True)
class ScalarField:
    """A smooth scalar function of ``arity`` inputs, evaluable on any carrier type."""

    arity: int
    evaluator: Callable
    name: str = ""

    def __call__(self, *args):
        if len(args) != self.arity:
            raise DimensionError(
                f"field {self.name or '<anon>'} expects {self.arity} inputs, got {len(args)}"
            )
        return self.evaluator(*args)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        if other.arity != self.arity:
            raise DimensionError("arity mismatch in field sum")
        return ScalarField(self.arity, lambda *a: self(*a) + other(*a))


@dataclass(frozen=True)
class VectorMap:
    """A smooth map from ``arity`` inputs to ``dim_out`` outputs."""

    arity: int
    dim_out: int
    evaluator: Callable
    name: str = ""

    def __call__(self, *args):
        if len(args) != self.arity:
            raise DimensionError(
                f"map {self.name or '<anon>'} expects {self.arity} inputs, got {len(args)}"
            )
        out = list(self.evaluator(*args))
        if len(out) != self.dim_out:
            raise DimensionError(
                f"map {self.name or '<anon>'} returned {len(out)} outputs, expected {self.dim_out}"
            )
        return out


def _as_point(point, arity: int) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    if point.ndim == 0 or point.shape[-1] != arity:
        raise DimensionError(f"point has trailing length {point.shape[-1:]} but arity is {arity}")
    return point


def _seeded_inputs(point, seeds1, seeds2):
    batch = point.shape[:-1]
    pad = (1,) * len(batch)
    return [
        HyperDual(
            point[..., k],
            seeds1[:, k].reshape(-1, *pad),
            seeds2[:, k].reshape(-1, *pad),
            0.0,
        )
        for k in range(point.shape[-1])
    ]


def _spread(out, shape):
    """Broadcast every component of an output (HyperDual or constant) to ``shape``."""
    if not isinstance(out, HyperDual):
        out = HyperDual(out)
    return [np.broadcast_to(np.asarray(c, dtype=float), shape) for c in out.components()]


def _check_finite(values, axis_names, what):
    values = np.asarray(values)
    if np.isfinite(values).all():
        return
    bad = np.argwhere(~np.isfinite(values))[0]
    raise NumericError(f"non-finite {what} at coordinate {axis_names(bad)}")


_PAIR_SEEDS: dict = {}


def _pair_seeds(m):
    if m not in _PAIR_SEEDS:
        eye = np.eye(m)
        ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        _PAIR_SEEDS[m] = (eye[ii.ravel()], eye[jj.ravel()])
    return _PAIR_SEEDS[m]


def value_grad_hess(field: ScalarField, point, *, symmetry_tol: float = 1e-10):
    """Value, gradient and symmetrized Hessian from a single batched hyper-dual pass.

    ``point`` may carry leading batch axes; the outputs then have shapes ``batch``,
    ``batch + (m,)`` and ``batch + (m, m)``.
    """
    m = field.arity
    point = _as_point(point, m)
    s1, s2 = _pair_seeds(m)
    out = field(*_seeded_inputs(point, s1, s2))
    if not isinstance(out, HyperDual):
        out = HyperDual(out)
    batch = point.shape[:-1]
    shape = (m * m,) + batch
    value = np.broadcast_to(np.asarray(out.re, dtype=float), shape)[0]
    e1 = np.broadcast_to(np.asarray(out.e1, dtype=float), shape)
    e12 = np.broadcast_to(np.asarray(out.e12, dtype=float), shape)
    grad = np.moveaxis(e1[:: m + 1], 0, -1)
    hess = np.moveaxis(e12.reshape((m, m) + batch), (0, 1), (-2, -1))
    _check_finite(grad, lambda idx: int(idx[-1]), "gradient")
    _check_finite(hess, lambda idx: (int(idx[-2]), int(idx[-1])), "Hessian")
    hess_t = np.swapaxes(hess, -1, -2)
    diff = np.abs(hess - hess_t).max() if hess.size else 0.0
    if diff > symmetry_tol:
        asym = diff / max(1.0, float(np.abs(hess).max()))
        if asym > symmetry_tol:
            warnings.warn(f"Hessian asymmetry {asym:.3e} exceeds {symmetry_tol:g}", NumericWarning)
    return value, grad, 0.5 * (hess + hess_t)


def gradient(field: ScalarField, point) -> np.ndarray:
    """Exact first partials of ``field`` at ``point`` (one seed per coordinate, batched)."""
    m = field.arity
    point = _as_point(point, m)
    eye = np.eye(m)
    out = field(*_seeded_inputs(point, eye, np.zeros((m, m))))
    _, e1, _, _ = _spread(out, (m,) + point.shape[:-1])
    grad = np.moveaxis(e1, 0, -1)
    _check_finite(grad, lambda idx: int(idx[-1]), "gradient")
    return grad


def hessian(field: ScalarField, point) -> np.ndarray:
    return value_grad_hess(field, point)[2]


def jacobian(fmap: VectorMap, point) -> np.ndarray:
    """Exact ``dim_out x arity`` Jacobian (batch axes leading)."""
    m = fmap.arity
    point = _as_point(point, m)
    eye = np.eye(m)
    outs = fmap(*_seeded_inputs(point, eye, np.zeros((m, m))))
    shape = (m,) + point.shape[:-1]
    rows = [np.moveaxis(_spread(o, shape)[1], 0, -1) for o in outs]
    jac = np.stack(rows, axis=-2)
    _check_finite(jac, lambda idx: (int(idx[-2]), int(idx[-1])), "Jacobian")
    return jac


def pushforward(fmap, point: Sequence, direction: Sequence):
    """Evaluate ``fmap`` and its directional derivative along ``direction`` in one Dual pass.

    Inputs are sequences of per-coordinate values (any carrier type); returns
    ``(values, tangents)`` as lists for a VectorMap, or a pair of scalars for a ScalarField.
    """
    out = fmap(*[Dual(p, d) for p, d in zip(point, direction)])
    if isinstance(fmap, ScalarField):
        return _split_dual(out)
    pairs = [_split_dual(o) for o in out]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def _split_dual(o):
    if isinstance(o, Dual):
        return o.v, o.d
    return o, 0.0 * o
