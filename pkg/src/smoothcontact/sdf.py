"""Analytical SDF primitives and their smooth composition.

Every node evaluates, for points ``(..., 3)`` in its parent frame, a triple
``(phi, grad, ndir)``:

* ``phi``  signed distance (negative inside),
* ``grad`` its analytic gradient,
* ``ndir`` the field used for contact normals.  It equals ``grad`` except for
  superquadrics, whose normals come from the inside-outside function because
  the gradient of their distance is not monotone far from the surface.

Gradients are written out analytically rather than obtained by
differentiation, so they can themselves be pushed through
:class:`~smoothcontact.dual.Dual` to get pose derivatives of normals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import inverse_transform_points, pose_rt, so3_exp
from .smoothops import lse_max, softmax

# guards; far below any physical length scale used here
SQ_COORD_FLOOR = 1e-30
SQ_RADIUS_FLOOR = 1e-20
SQ_SUM_FLOOR = 1e-300
SPHERE_FLOOR = 1e-20


def _norm_sq(v):
    return np.sum(v * v, axis=-1)


def smooth_normalize(v, tau):
    """``v / sqrt(tau + |v|^2)``; norm stays below one and vanishes with ``v``."""
    return v / np.sqrt(tau + _norm_sq(v))[..., None]


class Node:
    def evaluate(self, p, tau_n):  # pragma: no cover - interface
        raise NotImplementedError

    def leaves(self) -> list["Node"]:
        return [self]


@dataclass
class Primitive(Node):
    """Leaf with an optional rigid placement inside the body frame."""

    pose: np.ndarray = field(default_factory=lambda: np.zeros(6), kw_only=True)

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=float)
        R, t = pose_rt(self.pose)
        self._R, self._t = np.asarray(R), np.asarray(t)
        self._identity = not np.any(self.pose)

    def evaluate(self, p, tau_n):
        if self._identity:
            return self.local(p, tau_n)
        q = (p - self._t) @ self._R
        phi, g, n = self.local(q, tau_n)
        Rt = self._R.T
        return phi, g @ Rt, n @ Rt

    def local(self, q, tau_n):  # pragma: no cover - interface
        raise NotImplementedError


@dataclass
class Superquadric(Primitive):
    """Superquadric with half-axes ``(a, b, c)`` and boxiness ``eps1, eps2``."""

    a: float
    b: float
    c: float
    eps1: float
    eps2: float

    def __post_init__(self):
        super().__post_init__()
        if not (0 < self.eps1 <= 2 and 0 < self.eps2 <= 2):
            raise ValueError("superquadric exponents must lie in (0, 2]")
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError("superquadric axes must be positive")
        self._scale = np.array([self.a, self.b, self.c], dtype=float)

    def inside_outside(self, q):
        """Value and gradient of ``f``; ``f = 1`` on the surface."""
        e1, e2 = self.eps1, self.eps2
        s = q / self._scale
        sq = s * s + SQ_COORD_FLOOR
        X, Y, Z = sq[..., 0], sq[..., 1], sq[..., 2]
        Xp, Yp, Zp = X ** (1.0 / e2), Y ** (1.0 / e2), Z ** (1.0 / e1)
        g = Xp + Yp + SQ_SUM_FLOOR
        G = g ** (e2 / e1)
        f = G + Zp
        k = 2.0 / e1
        grad = np.stack([
            k * (G / g) * (Xp / X) * s[..., 0] / self.a,
            k * (G / g) * (Yp / Y) * s[..., 1] / self.b,
            k * (Zp / Z) * s[..., 2] / self.c,
        ], axis=-1)
        return f, grad, s

    def local(self, q, tau_n):
        f, df, s = self.inside_outside(q)
        r = np.sqrt(_norm_sq(s) + SQ_RADIUS_FLOOR)
        fp = f ** (-0.5 * self.eps1)
        h = 1.0 - fp
        phi = h / r
        dh = (0.5 * self.eps1 * fp / f)[..., None] * df
        dr = s / self._scale / r[..., None]
        grad = dh / r[..., None] - (h / (r * r))[..., None] * dr
        return phi, grad, smooth_normalize(df, tau_n)


@dataclass
class ConvexPolyhedron(Primitive):
    """Intersection of half-spaces; smooth max of plane distances."""

    normals: np.ndarray
    points: np.ndarray
    tau: float = 1e-3

    def __post_init__(self):
        super().__post_init__()
        self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if len(self.normals) == 0 or len(self.normals) != len(self.points):
            raise ValueError("need matching, non-empty normals and points")
        if not np.allclose(np.linalg.norm(self.normals, axis=1), 1.0, atol=1e-9):
            raise ValueError("plane normals must be unit length")
        self._offsets = np.sum(self.normals * self.points, axis=1)

    @classmethod
    def box(cls, size, tau: float = 1e-3, **kw) -> "ConvexPolyhedron":
        half = np.asarray(size, dtype=float) / 2.0
        eye = np.eye(3)
        normals = np.concatenate([eye, -eye])
        points = np.concatenate([eye * half, -eye * half])
        return cls(normals=normals, points=points, tau=tau, **kw)

    def local(self, q, tau_n):
        d = q @ self.normals.T - self._offsets
        phi = lse_max(d, self.tau)
        w = softmax(d, self.tau)
        grad = w @ self.normals if np.ndim(w) >= 2 else np.sum(w[..., None] * self.normals, axis=-2)
        return phi, grad, grad


@dataclass
class OrientedPointcloud(Primitive):
    """Gaussian-weighted blend of tangent-plane distances."""

    points: np.ndarray
    normals: np.ndarray
    lengthscales: np.ndarray

    def __post_init__(self):
        super().__post_init__()
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)
        self.lengthscales = np.broadcast_to(
            np.asarray(self.lengthscales, dtype=float), (len(self.points),)).copy()
        if len(self.points) == 0 or len(self.normals) != len(self.points):
            raise ValueError("need matching, non-empty points and normals")
        if not np.allclose(np.linalg.norm(self.normals, axis=1), 1.0, atol=1e-9):
            raise ValueError("normals must be unit length")
        if np.any(self.lengthscales <= 0):
            raise ValueError("lengthscales must be positive")
        self._inv_th2 = 1.0 / self.lengthscales ** 2

    def local(self, q, tau_n):
        r = q[..., None, :] - self.points
        logw = -0.5 * _norm_sq(r) * self._inv_th2
        # normalized weights in log space: same ratio as B_i / sum B_j, no underflow
        w = softmax(logw, 1.0)
        s = np.sum(r * self.normals, axis=-1)
        phi = np.sum(w * s, axis=-1)
        dlogw = -r * self._inv_th2[:, None]
        grad = (np.sum(w[..., None] * self.normals, axis=-2)
                + np.sum(((s - phi[..., None]) * w)[..., None] * dlogw, axis=-2))
        return phi, grad, grad


@dataclass
class Sphere(Primitive):
    radius: float
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        super().__post_init__()
        self.center = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def local(self, q, tau_n):
        d = q - self.center
        r = np.sqrt(_norm_sq(d) + SPHERE_FLOOR)
        grad = d / r[..., None]
        return r - self.radius, grad, grad


@dataclass
class Union(Node):
    children: list
    tau: float = 1e-2

    def __post_init__(self):
        if not self.children:
            raise ValueError("union needs at least one child")

    def leaves(self):
        return [leaf for c in self.children for leaf in c.leaves()]

    def evaluate(self, p, tau_n):
        if len(self.children) == 1:
            return self.children[0].evaluate(p, tau_n)
        parts = [c.evaluate(p, tau_n) for c in self.children]
        vals = np.stack([pt[0] for pt in parts], axis=-1)
        phi = -lse_max(-vals, self.tau)
        w = softmax(-vals, self.tau)
        grad = sum(w[..., i, None] * pt[1] for i, pt in enumerate(parts))
        ndir = sum(w[..., i, None] * pt[2] for i, pt in enumerate(parts))
        return phi, grad, ndir


@dataclass
class Subtraction(Node):
    """``positive`` with ``negative`` carved out."""

    positive: Node
    negative: Node
    tau: float = 1e-2

    def leaves(self):
        return self.positive.leaves() + self.negative.leaves()

    def evaluate(self, p, tau_n):
        pp, gp, np_ = self.positive.evaluate(p, tau_n)
        pn, gn, nn = self.negative.evaluate(p, tau_n)
        pair = np.stack([pp, -pn], axis=-1)
        phi = lse_max(pair, self.tau)
        w = softmax(pair, self.tau)
        w0, w1 = w[..., 0, None], w[..., 1, None]
        return phi, w0 * gp - w1 * gn, w0 * np_ - w1 * nn


class SmoothSdf:
    """A composition tree of primitives, queried in its own (body) frame."""

    def __init__(self, root: Node):
        if isinstance(root, (list, tuple)):
            root = Union(list(root))
        self.root = root

    @property
    def leaves(self) -> list:
        return self.root.leaves()

    def evaluate(self, p, tau_n: float = 1e-6):
        """``(phi, grad, normal)`` with the normal smoothly normalized."""
        phi, grad, ndir = self.root.evaluate(p, tau_n)
        return phi, grad, smooth_normalize(ndir, tau_n)

    def value(self, p):
        return self.root.evaluate(p, 1e-6)[0]

    def gradient(self, p):
        return self.root.evaluate(p, 1e-6)[1]

    def __call__(self, p):
        return self.value(p)


class PosedSdf:
    """A :class:`SmoothSdf` placed in the world by rotation ``R`` and translation ``t``.

    ``R`` and ``t`` may carry leading batch axes and dual tangents.  Query
    points have shape ``(*batch, N, 3)``.
    """

    def __init__(self, sdf: SmoothSdf, R, t):
        self.sdf, self.R, self.t = sdf, R, t

    @classmethod
    def from_pose(cls, sdf: SmoothSdf, pose) -> "PosedSdf":
        return cls(sdf, so3_exp(pose[..., 3:]), pose[..., :3])

    def evaluate(self, x, tau_n: float = 1e-6):
        nb = np.ndim(self.t) - 1
        shape = np.shape(x)
        q = inverse_transform_points(self.R, self.t, x.reshape(shape[:nb] + (-1, 3)))
        phi, g, n = self.sdf.evaluate(q, tau_n)
        Rt = np.swapaxes(self.R, -1, -2)
        return phi.reshape(shape[:-1]), (g @ Rt).reshape(shape), (n @ Rt).reshape(shape)

    def value(self, x):
        return self.evaluate(x)[0]


def sphere_trace_project(sdf, p, n_iters: int = 5, tau: float = 1e-2, tau_n: float = 1e-6):
    """Move ``p`` toward the zero level set by ``n_iters`` unrolled Newton steps.

    Each step is ``p - phi * g / (tau + |g|^2)``, a level-set Newton step
    whose length stays bounded where the gradient vanishes.  ``sdf`` is a
    :class:`SmoothSdf` or :class:`PosedSdf`.
    """
    for _ in range(n_iters):
        phi, g, _ = sdf.evaluate(p, tau_n)
        p = p - (phi / (tau + _norm_sq(g)))[..., None] * g
    return p
