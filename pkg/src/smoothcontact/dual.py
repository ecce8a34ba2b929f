"""Forward-mode dual arrays.

A :class:`Dual` carries a primal ``ndarray`` of shape ``S`` and a tangent
``ndarray`` of shape ``S + (W,)``: ``W`` derivative directions propagated
together.  It implements numpy's ``__array_ufunc__`` / ``__array_function__``
protocols, so library code written against plain numpy runs unchanged on
either floats or duals::

    >>> x = Dual(np.array(2.0), np.array([1.0]))
    >>> y = np.exp(x) * x
    >>> float(y.tan[0])   # d/dx x e^x at 2 = 3 e^2
    22.16716829679195

Only the ufuncs and array functions used by this package are supported;
anything else raises ``TypeError`` rather than silently dropping tangents.
"""

from __future__ import annotations

import contextlib

import numpy as np
from numpy.lib.mixins import NDArrayOperatorsMixin

POSE_WIDTH = 12

# when set, data-dependent hard branches on duals raise BranchError
_strict = False


class BranchError(RuntimeError):
    """A hard, data-dependent decision was taken on a differentiated value."""


@contextlib.contextmanager
def strict_branches():
    """Debug mode: comparisons, ``bool()``, ``max``/``min``/``clip`` on duals raise.

    Code meant to be smooth should run unchanged inside this block.  Explicit
    stop-gradients remain allowed, e.g. ``np.where(primal(x) < c, a, b)`` for
    a series switch-over whose branches agree to machine precision.
    """
    global _strict
    prev, _strict = _strict, True
    try:
        yield
    finally:
        _strict = prev


def _check_branch(what: str) -> None:
    if _strict:
        raise BranchError(f"data-dependent {what} on a dual value")

_HANDLED_FUNCTIONS: dict = {}


def _implements(func):
    def decorator(impl):
        _HANDLED_FUNCTIONS[func] = impl
        return impl

    return decorator


def primal(x):
    """Primal part of ``x``; plain arrays pass through.  Acts as stop-gradient."""
    return x.val if isinstance(x, Dual) else x


def tangent_width(*xs) -> int | None:
    for x in xs:
        if isinstance(x, Dual):
            return x.tan.shape[-1]
    return None


def _lift(x, width: int) -> "Dual":
    if isinstance(x, Dual):
        return x
    x = np.asarray(x, dtype=float)
    return Dual(x, np.zeros(x.shape + (width,)))


def _full_tan(d: "Dual", shape) -> np.ndarray:
    target = tuple(shape) + (d.tan.shape[-1],)
    if d.tan.shape == target:
        return d.tan
    return np.broadcast_to(d.tan, target)


def _e(x):
    """Expand a primal factor so it broadcasts against a tangent array."""
    return np.asarray(x)[..., None]


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Dual(NDArrayOperatorsMixin):
    __slots__ = ("val", "tan")
    __array_priority__ = 100

    def __init__(self, val, tan):
        self.val = np.asarray(val, dtype=float)
        self.tan = np.asarray(tan, dtype=float)
        if self.tan.shape[:-1] != self.val.shape:
            self.tan = np.broadcast_to(self.tan, self.val.shape + self.tan.shape[-1:])

    # -- array-like surface -------------------------------------------------
    @property
    def shape(self):
        return self.val.shape

    @property
    def ndim(self):
        return self.val.ndim

    @property
    def size(self):
        return self.val.size

    @property
    def width(self) -> int:
        return self.tan.shape[-1]

    def __len__(self):
        return len(self.val)

    def __repr__(self):
        return f"Dual(val={self.val!r}, tan.shape={self.tan.shape})"

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key if not isinstance(k, np.ndarray)):
            tkey = key + (slice(None),)
        else:
            tkey = key
        return Dual(self.val[key], self.tan[tkey])

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        val = self.val.reshape(shape)
        return Dual(val, self.tan.reshape(val.shape + (self.width,)))

    def sum(self, axis=None, keepdims=False):
        return np.sum(self, axis=axis, keepdims=keepdims)

    def swapaxes(self, a, b):
        return np.swapaxes(self, a, b)

    def astype(self, dtype):
        return self

    def __float__(self):
        return float(self.val)

    def __bool__(self):
        _check_branch("truth test")
        return bool(self.val)

    # -- ufuncs -------------------------------------------------------------
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs.get("out") is not None:
            return NotImplemented
        if ufunc in _PRIMAL_ONLY:
            _check_branch(ufunc.__name__)
            return ufunc(*(primal(x) for x in inputs))
        rule = _UFUNC_RULES.get(ufunc)
        if rule is None:
            raise TypeError(f"Dual does not support ufunc {ufunc.__name__}")
        return rule(*inputs)

    def __array_function__(self, func, types, args, kwargs):
        impl = _HANDLED_FUNCTIONS.get(func)
        if impl is None:
            raise TypeError(f"Dual does not support {func.__name__}")
        return impl(*args, **kwargs)


# -- ufunc derivative rules --------------------------------------------------

def _unary(fn, dfn):
    def rule(x):
        v = fn(x.val)
        return Dual(v, _e(dfn(x.val, v)) * x.tan)

    return rule


def _add(a, b):
    val = np.add(primal(a), primal(b))
    if isinstance(a, Dual) and isinstance(b, Dual):
        return Dual(val, a.tan + b.tan)
    d = a if isinstance(a, Dual) else b
    return Dual(val, _full_tan(d, val.shape))


def _subtract(a, b):
    val = np.subtract(primal(a), primal(b))
    if isinstance(a, Dual) and isinstance(b, Dual):
        return Dual(val, a.tan - b.tan)
    if isinstance(a, Dual):
        return Dual(val, _full_tan(a, val.shape))
    return Dual(val, -_full_tan(b, val.shape))


def _multiply(a, b):
    av, bv = primal(a), primal(b)
    val = np.multiply(av, bv)
    if isinstance(a, Dual) and isinstance(b, Dual):
        return Dual(val, a.tan * _e(bv) + _e(av) * b.tan)
    if isinstance(a, Dual):
        return Dual(val, _full_tan(a, val.shape) * _e(bv))
    return Dual(val, _e(av) * _full_tan(b, val.shape))


def _divide(a, b):
    av, bv = primal(a), primal(b)
    val = np.divide(av, bv)
    if isinstance(b, Dual):
        inv = 1.0 / bv
        tb = -_e(val * inv) * b.tan
        if isinstance(a, Dual):
            return Dual(val, a.tan * _e(inv) + tb)
        return Dual(val, np.broadcast_to(tb, val.shape + (b.width,)))
    return Dual(val, _full_tan(a, val.shape) / _e(bv))


def _power(a, b):
    av, bv = primal(a), primal(b)
    val = np.power(av, bv)
    tan = 0.0
    w = tangent_width(a, b)
    if isinstance(a, Dual):
        tan = tan + _e(bv * np.power(av, bv - 1.0)) * a.tan
    if isinstance(b, Dual):
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(av > 0, np.log(np.where(av > 0, av, 1.0)), 0.0)
        tan = tan + _e(val * lg) * b.tan
    return Dual(val, np.broadcast_to(tan, val.shape + (w,)))


def _select2(take_a, a, b, val):
    w = tangent_width(a, b)
    ta = _full_tan(_lift(a, w), val.shape)
    tb = _full_tan(_lift(b, w), val.shape)
    return Dual(val, np.where(_e(take_a), ta, tb))


def _maximum(a, b):
    _check_branch("maximum")
    av, bv = primal(a), primal(b)
    val = np.maximum(av, bv)
    return _select2(np.broadcast_to(av >= bv, val.shape), a, b, val)


def _minimum(a, b):
    _check_branch("minimum")
    av, bv = primal(a), primal(b)
    val = np.minimum(av, bv)
    return _select2(np.broadcast_to(av <= bv, val.shape), a, b, val)


def _logaddexp(a, b):
    av, bv = primal(a), primal(b)
    val = np.logaddexp(av, bv)
    w = tangent_width(a, b)
    wa = _sigmoid(av - bv)
    ta = _full_tan(_lift(a, w), val.shape)
    tb = _full_tan(_lift(b, w), val.shape)
    return Dual(val, _e(wa) * ta + _e(1.0 - wa) * tb)


def _arctan2(y, x):
    yv, xv = primal(y), primal(x)
    val = np.arctan2(yv, xv)
    w = tangent_width(y, x)
    r2 = xv * xv + yv * yv
    ty = _full_tan(_lift(y, w), val.shape)
    tx = _full_tan(_lift(x, w), val.shape)
    return Dual(val, _e(xv / r2) * ty - _e(yv / r2) * tx)


def _matmul(a, b):
    av, bv = primal(a), primal(b)
    if np.ndim(av) == 1:
        return _matmul(a[None, :], b)[..., 0, :]
    if np.ndim(bv) < 2:
        raise TypeError("Dual matmul requires a right operand with ndim >= 2")
    val = np.matmul(av, bv)
    w = tangent_width(a, b)
    tan = np.zeros(val.shape + (w,))
    if isinstance(a, Dual):
        tan = tan + np.einsum("...ijw,...jk->...ikw", a.tan, bv)
    if isinstance(b, Dual):
        tan = tan + np.einsum("...ij,...jkw->...ikw", av, b.tan)
    return Dual(val, tan)


_UFUNC_RULES = {
    np.add: _add,
    np.subtract: _subtract,
    np.multiply: _multiply,
    np.true_divide: _divide,
    np.power: _power,
    np.maximum: _maximum,
    np.minimum: _minimum,
    np.logaddexp: _logaddexp,
    np.arctan2: _arctan2,
    np.matmul: _matmul,
    np.negative: lambda x: Dual(-x.val, -x.tan),
    np.positive: lambda x: x,
    np.exp: _unary(np.exp, lambda x, v: v),
    np.expm1: _unary(np.expm1, lambda x, v: v + 1.0),
    np.log: _unary(np.log, lambda x, v: 1.0 / x),
    np.log1p: _unary(np.log1p, lambda x, v: 1.0 / (1.0 + x)),
    np.sqrt: _unary(np.sqrt, lambda x, v: 0.5 / v),
    np.square: _unary(np.square, lambda x, v: 2.0 * x),
    np.reciprocal: _unary(np.reciprocal, lambda x, v: -v * v),
    np.tanh: _unary(np.tanh, lambda x, v: 1.0 - v * v),
    np.sin: _unary(np.sin, lambda x, v: np.cos(x)),
    np.cos: _unary(np.cos, lambda x, v: -np.sin(x)),
    np.absolute: _unary(np.absolute, lambda x, v: np.sign(x)),
}

_PRIMAL_ONLY = {
    np.greater, np.greater_equal, np.less, np.less_equal, np.equal,
    np.not_equal, np.isfinite, np.isnan, np.isinf, np.sign, np.floor,
    np.ceil, np.logical_and, np.logical_or, np.logical_not,
}


# -- array functions ---------------------------------------------------------

@_implements(np.sum)
def _sum(a, axis=None, keepdims=False, **_):
    if axis is None:
        axis = tuple(range(a.ndim))
    axes = (axis,) if np.isscalar(axis) else tuple(axis)
    axes = tuple(ax % a.ndim for ax in axes)
    return Dual(np.sum(a.val, axis=axes, keepdims=keepdims),
                np.sum(a.tan, axis=axes, keepdims=keepdims))


@_implements(np.mean)
def _mean(a, axis=None, keepdims=False, **_):
    s = _sum(a, axis=axis, keepdims=keepdims)
    return s * (s.val.size / a.val.size)


@_implements(np.stack)
def _stack(arrays, axis=0, **_):
    arrays = list(arrays)
    w = tangent_width(*arrays)
    ds = [_lift(x, w) for x in arrays]
    shape = np.broadcast_shapes(*(d.val.shape for d in ds))
    vals = np.stack([np.broadcast_to(d.val, shape) for d in ds], axis=axis)
    tax = axis % vals.ndim
    tans = np.stack([_full_tan(d, shape) for d in ds], axis=tax)
    return Dual(vals, tans)


@_implements(np.concatenate)
def _concatenate(arrays, axis=0, **_):
    arrays = list(arrays)
    w = tangent_width(*arrays)
    ds = [_lift(x, w) for x in arrays]
    vals = np.concatenate([d.val for d in ds], axis=axis)
    tax = axis % vals.ndim
    return Dual(vals, np.concatenate([d.tan for d in ds], axis=tax))


@_implements(np.where)
def _where(cond, a, b):
    cond = primal(cond)
    val = np.where(cond, primal(a), primal(b))
    return _select2(np.broadcast_to(cond, val.shape), a, b, val)


@_implements(np.broadcast_to)
def _broadcast_to(a, shape, **_):
    shape = tuple(shape)
    return Dual(np.broadcast_to(a.val, shape), _full_tan(a, shape))


@_implements(np.expand_dims)
def _expand_dims(a, axis):
    val = np.expand_dims(a.val, axis)
    return Dual(val, a.tan.reshape(val.shape + (a.width,)))


@_implements(np.swapaxes)
def _swapaxes(a, axis1, axis2):
    n = a.ndim
    return Dual(np.swapaxes(a.val, axis1, axis2),
                np.swapaxes(a.tan, axis1 % n, axis2 % n))


@_implements(np.reshape)
def _reshape(a, shape, **_):
    return a.reshape(shape)


@_implements(np.take_along_axis)
def _take_along_axis(a, indices, axis):
    ax = axis % a.ndim
    return Dual(np.take_along_axis(a.val, indices, axis=ax),
                np.take_along_axis(a.tan, indices[..., None], axis=ax))


@_implements(np.cross)
def _cross(a, b, **_):
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


@_implements(np.clip)
def _clip(a, a_min, a_max, **_):
    return np.minimum(np.maximum(a, a_min), a_max)


@_implements(np.shape)
def _shape(a):
    return a.val.shape


@_implements(np.ndim)
def _ndim(a):
    return a.val.ndim


@_implements(np.zeros_like)
def _zeros_like(a, **_):
    return np.zeros_like(a.val)


@_implements(np.ones_like)
def _ones_like(a, **_):
    return np.ones_like(a.val)


# -- seeding -----------------------------------------------------------------

def variable(x, direction: int, width: int) -> Dual:
    """Seed ``x`` (any shape) with unit tangent along ``direction``."""
    x = np.asarray(x, dtype=float)
    tan = np.zeros(x.shape + (width,))
    tan[..., direction] = 1.0
    return Dual(x, tan)


def seed(x, offset: int = 0, width: int | None = None) -> Dual:
    """Seed the last axis of ``x`` element-wise into tangent slots ``offset..``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    width = n + offset if width is None else width
    if offset + n > width:
        raise ValueError(f"need width >= {offset + n}, got {width}")
    tan = np.zeros(x.shape + (width,))
    idx = np.arange(n)
    tan[..., idx, offset + idx] = 1.0
    return Dual(x, tan)


def seed_pose_tangents(pose1, pose2, width: int = POSE_WIDTH) -> tuple[Dual, Dual]:
    """Seed two 6D poses so that outputs carry their 1x12 pose Jacobian.

    Component ``i`` of ``pose1`` gets slot ``i``; component ``j`` of ``pose2``
    gets slot ``6 + j``.
    """
    if width < POSE_WIDTH:
        raise ValueError(f"tangent width must be >= {POSE_WIDTH}, got {width}")
    return seed(pose1, 0, width), seed(pose2, 6, width)


def extract_jacobian(outputs) -> np.ndarray:
    """Stack tangents of ``outputs`` into a ``(n_outputs, W)`` matrix.

    Plain (non-dual) entries are constants and give zero rows; their width is
    taken from any dual in the list.
    """
    if isinstance(outputs, Dual):
        return outputs.tan.reshape(-1, outputs.width)
    outputs = list(outputs)
    w = tangent_width(*outputs)
    if w is None:
        return np.zeros((len(outputs), 0))
    rows = []
    for o in outputs:
        if isinstance(o, Dual):
            rows.append(o.tan.reshape(-1, w))
        else:
            rows.append(np.zeros((np.size(o), w)))
    return np.concatenate(rows, axis=0)
