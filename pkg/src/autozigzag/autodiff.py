"""Forward-mode automatic differentiation with vector tangents.

A :class:`Dual` carries a value and the derivatives of that value with
respect to ``k`` seed directions. Values may be scalars or numpy arrays, so a
potential written with array expressions (a likelihood summed over ``J``
observations, say) is differentiated in a single vectorised pass: the tangent
of an array value of shape ``S`` has shape ``S + (k,)``.

Potentials should use the functions of this module (:func:`exp`,
:func:`log`, :func:`sum`, ...) instead of their numpy counterparts; the
module functions dispatch on the argument type and fall through to numpy for
plain floats and arrays, so the same potential evaluates on reals too.
"""

from __future__ import annotations

import builtins
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteGradient

__all__ = [
    "Dual",
    "Potential",
    "gradient",
    "value_and_gradient",
    "directional_derivative",
    "exp",
    "log",
    "log1p",
    "sqrt",
    "square",
    "logistic",
    "log_logistic",
    "softplus",
    "power",
    "sum",
    "dot",
    "logsumexp",
    "where",
]


def _col(c):
    # Append a length-1 tangent axis so a value-shaped factor broadcasts
    # against a tangent of shape S + (k,).
    if type(c) is np.ndarray and c.ndim:
        return c[..., None]
    return c


def _fit(tangent, value):
    shape = getattr(value, "shape", ())
    if tangent.shape[:-1] != shape:
        tangent = np.broadcast_to(tangent, shape + tangent.shape[-1:])
    return tangent


class Dual:
    """Value with forward-mode tangents; see the module docstring."""

    __slots__ = ("value", "tangent")
    # Make numpy defer to the reflected Dual operators (ndarray * Dual).
    __array_ufunc__ = None

    def __init__(self, value, tangent):
        self.value = value
        self.tangent = tangent

    @classmethod
    def seed(cls, x) -> "Dual":
        """Independent variables: a vector ``x`` seeded with the identity."""
        x = np.asarray(x, dtype=float)
        return cls(x, _identity(x.shape[0]))

    @property
    def shape(self):
        return np.shape(self.value)

    @property
    def ndim(self):
        return np.ndim(self.value)

    def __len__(self):
        return len(self.value)

    def __iter__(self):
        t = _fit(self.tangent, self.value)
        for i in range(len(self.value)):
            yield Dual(self.value[i], t[i])

    def __getitem__(self, idx):
        return Dual(self.value[idx], _fit(self.tangent, self.value)[idx])

    def __repr__(self):
        return f"Dual({self.value!r}, tangent={self.tangent!r})"

    # arithmetic ---------------------------------------------------------
    def __neg__(self):
        return Dual(-self.value, -self.tangent)

    def __pos__(self):
        return self

    # Tangents may stay un-broadcast (shape (k,) under an array value, say);
    # numpy broadcasting keeps the arithmetic right and _fit expands them
    # only where the layout matters (indexing, reductions).
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.tangent + other.tangent)
        return Dual(self.value + other, self.tangent)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.tangent - other.tangent)
        return Dual(self.value - other, self.tangent)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.tangent)

    def __mul__(self, other):
        if type(other) is float:
            return Dual(self.value * other, self.tangent * other)
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.tangent * _col(other.value) + other.tangent * _col(self.value),
            )
        if isinstance(other, (list, tuple)):
            other = np.asarray(other, dtype=float)
        return Dual(self.value * other, self.tangent * _col(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = self.value / other.value
            return Dual(
                q,
                (self.tangent - other.tangent * _col(q)) / _col(other.value),
            )
        if isinstance(other, (list, tuple)):
            other = np.asarray(other, dtype=float)
        return Dual(self.value / other, self.tangent / _col(other))

    def __rtruediv__(self, other):
        q = other / self.value
        return Dual(q, -self.tangent * _col(q / self.value))

    def __pow__(self, p):
        if isinstance(p, Dual):
            return exp(p * log(self))
        if p == 2:
            return Dual(self.value * self.value, self.tangent * _col(2.0 * self.value))
        if p == 1:
            return self
        return Dual(self.value**p, self.tangent * _col(p * self.value ** (p - 1)))

    def __rpow__(self, base):
        v = np.power(base, self.value)
        return Dual(v, self.tangent * _col(np.log(base) * v))

    # linear algebra with constant matrices ------------------------------
    def __matmul__(self, other):
        if isinstance(other, Dual):
            # vector . vector
            return Dual(
                self.value @ other.value,
                self.value @ _fit(other.tangent, other.value)
                + other.value @ _fit(self.tangent, self.value),
            )
        other = np.asarray(other, dtype=float)
        return Dual(self.value @ other, other.T @ _fit(self.tangent, self.value))

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=float)
        return Dual(other @ self.value, other @ _fit(self.tangent, self.value))

    # comparisons act on values (for branch selection, never differentiated)
    def __lt__(self, other):
        return self.value < _val(other)

    def __le__(self, other):
        return self.value <= _val(other)

    def __gt__(self, other):
        return self.value > _val(other)

    def __ge__(self, other):
        return self.value >= _val(other)

    def sum(self, axis=None):
        return sum(self, axis=axis)


_EYE: dict[int, np.ndarray] = {}


def _identity(k: int) -> np.ndarray:
    eye = _EYE.get(k)
    if eye is None:
        eye = np.eye(k)
        eye.flags.writeable = False
        _EYE[k] = eye
    return eye


def _val(x):
    return x.value if isinstance(x, Dual) else x


# elementary functions ---------------------------------------------------

def exp(x):
    if isinstance(x, Dual):
        e = np.exp(x.value)
        return Dual(e, x.tangent * _col(e))
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(np.log(x.value), x.tangent / _col(x.value))
    return np.log(x)


def log1p(x):
    if isinstance(x, Dual):
        return Dual(np.log1p(x.value), x.tangent / _col(1.0 + x.value))
    return np.log1p(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = np.sqrt(x.value)
        return Dual(s, x.tangent * _col(0.5 / s))
    return np.sqrt(x)


def square(x):
    return x * x


def power(x, p):
    return x**p


def _expit(v):
    return 0.5 * (1.0 + np.tanh(0.5 * v))


def logistic(x):
    """Logistic sigmoid ``1 / (1 + exp(-x))``."""
    if isinstance(x, Dual):
        s = _expit(x.value)
        return Dual(s, x.tangent * _col(s * (1.0 - s)))
    return _expit(x)


def softplus(x):
    """``log(1 + exp(x))`` without overflow."""
    if isinstance(x, Dual):
        return Dual(np.logaddexp(0.0, x.value), x.tangent * _col(_expit(x.value)))
    return np.logaddexp(0.0, x)


def log_logistic(x):
    """``log(logistic(x)) = -softplus(-x)``."""
    if isinstance(x, Dual):
        return Dual(-np.logaddexp(0.0, -x.value), x.tangent * _col(_expit(-x.value)))
    return -np.logaddexp(0.0, -x)


def sum(x, axis=None):  # noqa: A001 - mirrors numpy.sum
    if not isinstance(x, Dual):
        return np.sum(x, axis=axis)
    v = x.value
    value = v.sum(axis=axis) if type(v) is np.ndarray else np.sum(v, axis=axis)
    t = x.tangent
    if axis is None:
        n = v.size if type(v) is np.ndarray else 1
        if t.ndim == 1:
            tangent = t * float(n)
        elif t.ndim == 2 and t.shape[0] == n:
            tangent = t.sum(axis=0)
        else:
            t = _fit(t, x.value)
            tangent = t.reshape(-1, t.shape[-1]).sum(axis=0)
    else:
        t = _fit(t, x.value)
        tangent = t.sum(axis=axis if axis >= 0 else axis - 1)
    return Dual(value, tangent)


def dot(a, b):
    return a @ b


def where(cond, a, b):
    """Elementwise select; derivatives follow the selected branch."""
    if not isinstance(a, Dual) and not isinstance(b, Dual):
        return np.where(cond, a, b)
    va, vb = _val(a), _val(b)
    value = np.where(cond, va, vb)
    k = (a if isinstance(a, Dual) else b).tangent.shape[-1]
    ta = a.tangent if isinstance(a, Dual) else np.zeros(np.shape(va) + (k,))
    tb = b.tangent if isinstance(b, Dual) else np.zeros(np.shape(vb) + (k,))
    return Dual(value, np.where(np.asarray(cond)[..., None], _fit(ta, value), _fit(tb, value)))


def logsumexp(x, axis=None):
    """Stable ``log(sum(exp(x)))``; the shift is treated as a constant."""
    m = np.max(_val(x), axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    s = log(sum(exp(x - m), axis=axis))
    return s + (np.squeeze(m, axis=axis) if axis is not None else float(m.reshape(-1)[0]))


# potentials -------------------------------------------------------------

@dataclass(frozen=True)
class Potential:
    """Negative log-density ``U`` on R^d, up to an additive constant.

    ``fn`` receives a length-``d`` vector (a float array or a :class:`Dual`)
    and must return a scalar of the same kind. It must be pure.
    """

    dimension: int
    fn: Callable

    def __call__(self, x):
        return self.fn(x)


def value_and_gradient(p: Potential, x) -> tuple[float, np.ndarray]:
    """``(U(x), grad U(x))`` from one forward pass over Dual numbers."""
    x = np.asarray(x, dtype=float)
    # non-finite results are reported below, not as numpy warnings
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = p.fn(Dual(x, _identity(x.shape[0])))
    if isinstance(out, Dual):
        value = float(out.value)
        grad = np.array(out.tangent, dtype=float)
        if grad.shape != x.shape:
            grad = np.array(np.broadcast_to(grad, x.shape))
    else:
        value = float(out)
        grad = np.zeros(x.shape[0])
    if not (math.isfinite(value) and np.isfinite(grad).all()):
        raise NonFiniteGradient(x, value, grad)
    return value, grad


def gradient(p: Potential, x) -> np.ndarray:
    """Exact partial derivatives of ``p`` at ``x``.

    Raises
    ------
    NonFiniteGradient
        If ``U(x)`` or any partial derivative is not finite.
    """
    return value_and_gradient(p, x)[1]


def directional_derivative(p: Potential, x, v, i: int, t: float) -> float:
    """``dU/dx_i`` at ``x + v t`` (0-based ``i``)."""
    x = np.asarray(x, dtype=float)
    return float(gradient(p, x + np.asarray(v, dtype=float) * t)[i])
