"""Temperature-parameterized smooth stand-ins for non-smooth operators.

Every function here is total, overflow-safe for ``|x / tau|`` up to ~1e6, and
written in plain numpy so it also runs on :class:`~smoothcontact.dual.Dual`.
As ``tau -> 0`` each operator converges to its hard counterpart, which is
provided alongside (``*_hard``) for the no-smoothing code paths.
"""

from __future__ import annotations

import numpy as np

from .dual import primal


def sigmoid(x):
    # tanh form never overflows, unlike 1 / (1 + exp(-x))
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigma_greater(x, a, tau):
    """Soft ``[x > a]``."""
    return sigmoid((x - a) / tau)


def sigma_smaller(x, a, tau):
    """Soft ``[x < a]``."""
    return sigmoid((a - x) / tau)


def within_s(x, lo, hi, tau):
    """Soft ``[lo <= x <= hi]`` as a product of two sigmoids."""
    return sigma_greater(x, lo, tau) * sigma_smaller(x, hi, tau)


def sign_s(x, tau):
    return np.tanh(x / tau)


def softplus_s(x, tau):
    """``tau * log(1 + exp(x / tau))`` via ``logaddexp`` (no overflow)."""
    return tau * np.logaddexp(0.0, x / tau)


def clip_s(x, lo, hi, tau):
    return lo + softplus_s(x - lo, tau) - softplus_s(x - hi, tau)


def lse_max(xs, tau):
    """Smooth maximum ``tau * log(sum(exp(x / tau)))`` over the last axis."""
    z = xs / tau
    m = np.max(primal(z), axis=-1, keepdims=True)
    s = np.sum(np.exp(z - m), axis=-1, keepdims=True)
    return (tau * (np.log(s) + m))[..., 0]


def softmax(xs, tau, axis=-1):
    z = xs / tau
    m = np.max(primal(z), axis=axis, keepdims=True)
    e = np.exp(z - m)
    return e / np.sum(e, axis=axis, keepdims=True)


def argmin_s(xs, tau, axis=-1):
    """Probability vector concentrating on the smallest entry."""
    return softmax(-xs, tau, axis=axis)


def soft_topk(xs, k: int, tau):
    """Row-stochastic ``(..., k, D)`` matrix softly selecting the ``k`` largest.

    Row ``r`` is ``softmax(-|s_r - x| / tau)`` where ``s`` is ``xs`` sorted in
    descending order.  The sort permutation is discrete, but ``s`` itself is
    gathered from ``xs`` so the weights stay differentiable in the values.
    """
    d = np.shape(xs)[-1]
    if not 1 <= k <= d:
        raise ValueError(f"top-k count must satisfy 1 <= k <= {d}, got {k}")
    order = np.argsort(-primal(xs), axis=-1, kind="stable")[..., :k]
    s = np.take_along_axis(xs, order, axis=-1)
    gap = np.abs(s[..., :, None] - xs[..., None, :])
    return softmax(-gap, tau, axis=-1)


# -- hard counterparts -------------------------------------------------------

def greater_hard(x, a):
    return (primal(x) > primal(a)).astype(float)


def within_hard(x, lo, hi):
    xv = primal(x)
    return ((xv >= lo) & (xv <= hi)).astype(float)


def clip_hard(x, lo, hi):
    return np.clip(x, lo, hi)


def argmin_hard(xs, axis=-1):
    """One-hot of the first minimal entry along ``axis``."""
    xv = primal(xs)
    idx = np.argmin(xv, axis=axis)
    out = np.zeros(xv.shape)
    np.put_along_axis(out, np.expand_dims(idx, axis), 1.0, axis=axis)
    return out


def topk_hard(xs, k: int):
    d = np.shape(xs)[-1]
    if not 1 <= k <= d:
        raise ValueError(f"top-k count must satisfy 1 <= k <= {d}, got {k}")
    order = np.argsort(-primal(xs), axis=-1, kind="stable")[..., :k]
    out = np.zeros(order.shape + (d,))
    np.put_along_axis(out, order[..., None], 1.0, axis=-1)
    return out
