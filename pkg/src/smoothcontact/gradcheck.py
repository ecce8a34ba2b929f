"""Forward-mode vs finite-difference check of the pose Jacobian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, SmoothingConfig
from .dual import primal, seed_pose_tangents
from .manifold import generate_manifold
from .surface import SurfaceModel

# absolute scale below which a Jacobian counts as zero
GRAD_FLOOR = 1e-6


def mean_contact_distance(s1: SurfaceModel, pose1, s2: SurfaceModel, pose2,
                          cfg: SmoothingConfig = DEFAULT, mode: str = "full"):
    """Mean of ``activity * dist`` over the manifold.

    Weighting by activity makes the objective vanish (with its gradient)
    when the surfaces are apart.
    """
    m = generate_manifold(s1, pose1, s2, pose2, cfg, mode)
    return np.mean(m.activity * m.dist, axis=-1)


@dataclass
class GradCheckResult:
    value: float
    forward: np.ndarray     # (12,)
    finite_diff: np.ndarray  # (12,)
    max_rel_error: float

    def passed(self, tol: float = 1e-3) -> bool:
        return self.max_rel_error < tol


def check_pose_gradient(s1: SurfaceModel, pose1, s2: SurfaceModel, pose2,
                        cfg: SmoothingConfig = DEFAULT, mode: str = "full",
                        step: float = 1e-6) -> GradCheckResult:
    pose1 = np.asarray(pose1, dtype=float)
    pose2 = np.asarray(pose2, dtype=float)
    d1, d2 = seed_pose_tangents(pose1, pose2)
    out = mean_contact_distance(s1, d1, s2, d2, cfg, mode)
    fwd = np.asarray(out.tan).reshape(-1)[:12]

    x0 = np.concatenate([pose1, pose2])

    def f(x):
        return float(primal(mean_contact_distance(s1, x[:6], s2, x[6:], cfg, mode)))

    fd = np.empty(12)
    for i in range(12):
        e = np.zeros(12)
        e[i] = step
        fd[i] = (f(x0 + e) - f(x0 - e)) / (2 * step)
    scale = max(np.max(np.abs(fd)), GRAD_FLOOR)
    err = float(np.max(np.abs(fwd - fd)) / scale)
    return GradCheckResult(float(primal(out)), fwd, fd, err)
