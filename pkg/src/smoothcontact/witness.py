"""Witness points for edge-edge and vertex-triangle pairs.

Both routines enumerate the active sets of a tiny box-constrained problem in
closed form and blend the candidates with soft indicators, so they are
branch-free and differentiable.  With ``cfg.hard_qp`` the soft operators are
replaced by exact ones and the result is the true minimizer.

Inputs may carry any number of leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, SmoothingConfig
from .smoothops import (argmin_hard, argmin_s, clip_hard, clip_s, within_hard,
                        within_s)

# keeps norms differentiable at zero length
_NORM_FLOOR = 1e-30


class _Ops:
    """Clip / argmin / inside-indicator, either smooth or exact."""

    def __init__(self, cfg: SmoothingConfig):
        self.cfg = cfg

    def clip(self, x):
        if self.cfg.hard_qp:
            return clip_hard(x, 0.0, 1.0)
        return clip_s(x, 0.0, 1.0, self.cfg.tau_clip)

    def argmin(self, costs):
        if self.cfg.hard_qp:
            return argmin_hard(costs)
        return argmin_s(costs, self.cfg.tau_min)

    def within(self, x):
        if self.cfg.hard_qp:
            return within_hard(x, 0.0, 1.0)
        return within_s(x, 0.0, 1.0, self.cfg.tau_comp)


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def _norm(v):
    return np.sqrt(_dot(v, v) + _NORM_FLOOR)


def box_qp_objective(Q, c, x):
    """``0.5 x^T Q x + c^T x`` for batched ``Q (..., 2, 2)``, ``c, x (..., 2)``."""
    Qx = np.sum(Q * x[..., None, :], axis=-1)
    return 0.5 * _dot(x, Qx) + _dot(c, x)


def solve_box_qp_2(Q, c, cfg: SmoothingConfig = DEFAULT):
    """Minimize ``0.5 x^T Q x + c^T x`` over ``x in [0, 1]^2``.

    Returns ``(x, gamma_con)`` where ``gamma_con`` is the soft indicator that
    the unconstrained minimizer already lies inside the box.
    """
    ops = _Ops(cfg)
    Q1, Q2, Q3 = Q[..., 0, 0], Q[..., 0, 1], Q[..., 1, 1]
    c1, c2 = c[..., 0], c[..., 1]

    Q2_over_Q1 = Q2 / Q1
    Q2_over_Q3 = Q2 / Q3
    c1_over_Q1 = c1 / Q1
    c2_over_Q3 = c2 / Q3

    with np.errstate(divide="ignore", invalid="ignore"):
        x1_u = (Q2 * c2_over_Q3 - c1) / (Q1 - Q2 * Q2_over_Q3)
        x2_u = (Q2 * c1_over_Q1 - c2) / (Q3 - Q2 * Q2_over_Q1)

    # minimizers along the four sides of the box
    x1_1_x2_u = ops.clip(-(Q2_over_Q3 + c2_over_Q3))
    x1_0_x2_u = ops.clip(-c2_over_Q3)
    x1_u_x2_1 = ops.clip(-(Q2_over_Q1 + c1_over_Q1))
    x1_u_x2_0 = ops.clip(-c1_over_Q1)

    costs = np.stack([
        0.5 * (Q1 + 2 * Q2 * x1_1_x2_u + Q3 * x1_1_x2_u * x1_1_x2_u) + c1 + c2 * x1_1_x2_u,
        0.5 * Q3 * x1_0_x2_u * x1_0_x2_u + c2 * x1_0_x2_u,
        0.5 * (Q1 * x1_u_x2_1 * x1_u_x2_1 + 2 * Q2 * x1_u_x2_1 + Q3) + c1 * x1_u_x2_1 + c2,
        0.5 * Q1 * x1_u_x2_0 * x1_u_x2_0 + c1 * x1_u_x2_0,
    ], axis=-1)
    one, zero = np.ones(np.shape(costs)[:-1]), np.zeros(np.shape(costs)[:-1])
    cand1 = np.stack([one, zero, x1_u_x2_1, x1_u_x2_0], axis=-1)
    cand2 = np.stack([x1_1_x2_u, x1_0_x2_u, one, zero], axis=-1)
    w = ops.argmin(costs)
    x_c = np.stack([np.sum(w * cand1, axis=-1), np.sum(w * cand2, axis=-1)], axis=-1)

    x_u = np.stack([x1_u, x2_u], axis=-1)
    gamma = ops.within(x1_u) * ops.within(x2_u)
    if cfg.hard_qp:
        # exact selection; also keeps a singular Q (inf/nan x_u) out of the result
        inside = np.asarray(gamma > 0.5)[..., None]
        return np.where(inside, x_u, x_c), gamma
    g = gamma[..., None]
    return x_u * g + x_c * (1.0 - g), gamma


@dataclass
class EeWitnessResult:
    p1: object        # (..., 3)
    p2: object        # (..., 3)
    alpha: object     # (..., 2)
    gamma_con: object  # (...)


def ee_qp(e1, e2, lam: float):
    """``(Q, c)`` of the regularized closest-point problem between two edges."""
    t1 = e1[..., 1, :] - e1[..., 0, :]
    t2n = e2[..., 0, :] - e2[..., 1, :]
    b = e1[..., 0, :] - e2[..., 0, :]
    q11 = _dot(t1, t1) + lam
    q12 = _dot(t1, t2n)
    q22 = _dot(t2n, t2n) + lam
    Q = np.stack([np.stack([q11, q12], axis=-1), np.stack([q12, q22], axis=-1)], axis=-2)
    c = np.stack([_dot(b, t1) - 0.5 * lam, _dot(b, t2n) - 0.5 * lam], axis=-1)
    return Q, c


def ee_witness(e1, e2, cfg: SmoothingConfig = DEFAULT) -> EeWitnessResult:
    """Witness points of edge ``e1 (..., 2, 3)`` against edge ``e2 (..., 2, 3)``.

    The squared gap is regularized by ``lam * |alpha - 0.5|^2``, which pulls
    the solution to the edge midpoints when the edges are parallel.
    """
    shape = np.broadcast_shapes(np.shape(e1), np.shape(e2))
    e1, e2 = np.broadcast_to(e1, shape), np.broadcast_to(e2, shape)
    Q, c = ee_qp(e1, e2, cfg.lam)
    alpha, gamma = solve_box_qp_2(Q, c, cfg)
    a1, a2 = alpha[..., 0, None], alpha[..., 1, None]
    p1 = e1[..., 0, :] + (e1[..., 1, :] - e1[..., 0, :]) * a1
    p2 = e2[..., 0, :] + (e2[..., 1, :] - e2[..., 0, :]) * a2
    return EeWitnessResult(p1, p2, alpha, gamma)


def _edge_project(v, p0, p1, ops):
    d = p1 - p0
    t = _dot(v - p0, d) / (_dot(d, d) + _NORM_FLOOR)
    return p0 + ops.clip(t)[..., None] * d


def vf_witness(v, tri, cfg: SmoothingConfig = DEFAULT):
    """Closest point to ``v (..., 3)`` on triangle ``tri (..., 3, 3)``."""
    ops = _Ops(cfg)
    T0, T1, T2 = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    d10 = T1 - T0
    d20 = T2 - T0
    dv0 = v - T0

    vp_e = np.stack([
        _edge_project(v, T0, T1, ops),
        _edge_project(v, T1, T2, ops),
        _edge_project(v, T0, T2, ops),
    ], axis=-2)
    costs = _norm(v[..., None, :] - vp_e)
    w = ops.argmin(costs)
    vp_c = np.sum(w[..., None] * vp_e, axis=-2)

    nb = np.cross(d10, d20)
    nb_norm = _norm(nb)
    n = nb / nb_norm[..., None]
    dvp0 = dv0 - _dot(dv0, n)[..., None] * n
    vp_u = dvp0 + T0

    b2 = _dot(np.cross(d10, dvp0), n) / nb_norm
    b1 = _dot(np.cross(dvp0, d20), n) / nb_norm
    b0 = 1.0 - b1 - b2
    inside = ops.within(b0) * ops.within(b1) * ops.within(b2)
    g = inside[..., None]
    if cfg.hard_qp:
        return np.where(np.asarray(g > 0.5), vp_u, vp_c)
    return vp_u * g + vp_c * (1.0 - g)
