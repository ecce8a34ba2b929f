"""Independent reference solutions used by the tests.

Nothing here imports the solvers under test.  The box-QP and point-triangle
oracles are brute-force zooming grid searches followed by an exact
coordinate-descent polish; the polish matters for thin triangles, whose
elongated level sets can trap a pure grid zoom.
"""

from __future__ import annotations

import numpy as np

from smoothcontact.dual import Dual


# -- box QP ------------------------------------------------------------------

def qp_objective(Q, c, x):
    return 0.5 * np.einsum("...i,...ij,...j->...", x, Q, x) + np.einsum("...i,...i->...", c, x)


def qp_oracle(Q, c, grid: int = 41, levels: int = 14, polish: int = 200):
    """Minimize ``0.5 x^T Q x + c^T x`` over ``[0, 1]^2`` for batched Q, c."""
    n = len(Q)
    lo = np.zeros((n, 2))
    width = np.ones(n)
    g = np.linspace(0.0, 1.0, grid)
    for _ in range(levels):
        xs = lo[:, None, None, 0] + width[:, None, None] * g[None, :, None]
        ys = lo[:, None, None, 1] + width[:, None, None] * g[None, None, :]
        xs, ys = np.broadcast_arrays(xs, ys)
        pts = np.stack([xs, ys], axis=-1).reshape(n, -1, 2)
        f = qp_objective(Q[:, None], c[:, None], pts)
        best = pts[np.arange(n), np.argmin(f, axis=1)]
        width = width / 4.0
        lo = np.clip(best - width[:, None] / 2.0, 0.0, 1.0 - width[:, None])
    x = best.copy()
    # coordinate descent with exact clipped line minimization
    for _ in range(polish):
        x[:, 0] = np.clip(-(c[:, 0] + Q[:, 0, 1] * x[:, 1]) / Q[:, 0, 0], 0.0, 1.0)
        x[:, 1] = np.clip(-(c[:, 1] + Q[:, 1, 0] * x[:, 0]) / Q[:, 1, 1], 0.0, 1.0)
    fx = qp_objective(Q, c, x)
    fb = qp_objective(Q, c, best)
    return np.where((fx <= fb)[:, None], x, best)


def random_pd_qps(n: int, seed: int):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, 2, 2))
    Q = np.einsum("nki,nkj->nij", A, A) + 0.05 * np.eye(2)
    c = rng.normal(size=(n, 2)) * 2.0
    return Q, c


# -- point / triangle ------------------------------------------------------------

def triangle_oracle(v, tri, grid: int = 17, levels: int = 40, polish: int = 100):
    """Closest point on ``tri (n, 3, 3)`` to ``v (n, 3)`` by barycentric zooming."""
    n = len(v)
    T0, T1, T2 = tri[:, 0], tri[:, 1], tri[:, 2]
    lo = np.zeros((n, 2))
    width = np.ones(n)
    g = np.linspace(0.0, 1.0, grid)
    best = np.full((n, 2), 1.0 / 3.0)
    for _ in range(levels):
        u = lo[:, None, None, 0] + width[:, None, None] * g[None, :, None]
        w = lo[:, None, None, 1] + width[:, None, None] * g[None, None, :]
        u, w = np.broadcast_arrays(u, w)
        # fold samples outside the simplex back onto it
        u = np.clip(u, 0.0, 1.0)
        w = np.clip(w, 0.0, 1.0)
        s = np.maximum(u + w, 1.0)
        u, w = u / s, w / s
        u, w = u.reshape(n, -1), w.reshape(n, -1)
        p = T0[:, None] + u[..., None] * (T1 - T0)[:, None] + w[..., None] * (T2 - T0)[:, None]
        d = np.sum((p - v[:, None]) ** 2, axis=-1)
        k = np.argmin(d, axis=1)
        best = np.stack([u[np.arange(n), k], w[np.arange(n), k]], axis=-1)
        # halve slowly: thin triangles have elongated level sets
        width = width / 2.0
        lo = best - width[:, None] / 2.0
    # polish: exact line minimization along the three edge directions of the
    # simplex, clipped to stay feasible
    e1, e2 = T1 - T0, T2 - T0
    u, w = best[:, 0].copy(), best[:, 1].copy()
    for _ in range(polish):
        for du, dw in ((1.0, 0.0), (0.0, 1.0), (1.0, -1.0)):
            d = du * e1 + dw * e2
            r = T0 + u[:, None] * e1 + w[:, None] * e2 - v
            step = -np.sum(r * d, axis=1) / np.sum(d * d, axis=1)
            # feasible interval for u + s du >= 0, w + s dw >= 0, u + w + s (du + dw) <= 1
            lo_s, hi_s = np.full(n, -np.inf), np.full(n, np.inf)
            for val, rate in ((u, du), (w, dw), (1.0 - u - w, -(du + dw))):
                if rate > 0:
                    lo_s = np.maximum(lo_s, -val / rate)
                elif rate < 0:
                    hi_s = np.minimum(hi_s, -val / rate)
            step = np.clip(step, lo_s, hi_s)
            u, w = u + step * du, w + step * dw
    return T0 + u[:, None] * e1 + w[:, None] * e2


# -- finite differences ----------------------------------------------------------

def directional_check(fn, x, direction, h: float = 1e-5):
    """``(forward-mode, central-difference)`` derivatives of ``fn`` at ``x``.

    ``fn`` must accept plain arrays and single-direction duals.
    """
    x = np.asarray(x, dtype=float)
    direction = np.asarray(direction, dtype=float)
    out = fn(Dual(x, direction[..., None]))
    fwd = np.asarray(out.tan)[..., 0] if isinstance(out, Dual) else np.zeros(np.shape(out))
    fd = (np.asarray(fn(x + h * direction)) - np.asarray(fn(x - h * direction))) / (2 * h)
    return fwd, fd


def rel_error(a, b, floor: float = 1e-7) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def max_rel_to_scale(a, b, floor: float = 1e-7) -> float:
    """Largest deviation relative to the larger of the two arrays' magnitudes."""
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), floor)
    return float(np.max(np.abs(a - b)) / scale)


def derivatives_agree(fwd, fd, rtol: float = 1e-4, atol: float = 1e-7) -> bool:
    """Relative tolerance, with an absolute floor for entries near zero."""
    fwd, fd = np.asarray(fwd), np.asarray(fd)
    bound = rtol * np.maximum(np.abs(fwd), np.abs(fd)) + atol
    return bool(np.all(np.abs(fwd - fd) <= bound))
