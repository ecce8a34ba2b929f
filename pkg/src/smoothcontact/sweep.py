"""Witness point of a rotating edge against a fixed one.

Edge 1 spins about the z axis through the origin; edge 2 is fixed along x
at ``y = offset``.  As edge 1 passes the parallel configuration its closest
point jumps between the edge ends unless the witness problem is smoothed.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .config import SmoothingConfig
from .witness import ee_witness

SWEEP_CONFIGS = {
    "no_smoothing": SmoothingConfig(lam=0.0, hard_qp=True),
    "l2_only": SmoothingConfig(lam=0.01, hard_qp=True),
    "l2_smooth": SmoothingConfig(lam=0.01, tau_clip=0.1, tau_min=0.1, tau_comp=0.1),
}


@dataclass
class SweepTrace:
    name: str
    theta: np.ndarray   # (S,)
    p1: np.ndarray      # (S, 3)
    dp1: np.ndarray     # (S, 3) finite-difference derivative in theta

    def max_jump(self) -> float:
        return float(np.max(np.linalg.norm(np.diff(self.p1, axis=0), axis=-1)))

    def max_rate(self) -> float:
        return float(np.max(np.linalg.norm(self.dp1, axis=-1)))


def rotating_edges(theta, half_length: float = 1.0, fixed_half_length: float = 2.0,
                   offset: float = -1.2):
    """``(e1, e2)`` with shapes ``(S, 2, 3)`` for angles ``theta (S,)``."""
    theta = np.asarray(theta, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    z = np.zeros_like(theta)
    a = half_length * np.stack([s, -c, z], axis=-1)
    e1 = np.stack([a, -a], axis=-2)
    e2 = np.broadcast_to(np.array([[-fixed_half_length, offset, 0.0],
                                   [fixed_half_length, offset, 0.0]]), e1.shape)
    return e1, e2


def run_sweep(cfg: SmoothingConfig, n_steps: int = 10_000, name: str = "",
              **geometry) -> SweepTrace:
    """Sample ``theta`` on ``[0, pi]`` with spacing ``pi / n_steps``."""
    theta = np.linspace(0.0, np.pi, n_steps + 1)
    e1, e2 = rotating_edges(theta, **geometry)
    p1 = np.asarray(ee_witness(e1, e2, cfg).p1)
    dp1 = np.gradient(p1, theta, axis=0)
    return SweepTrace(name, theta, p1, dp1)


def run_all(n_steps: int = 10_000, **geometry) -> list[SweepTrace]:
    return [run_sweep(cfg, n_steps, name, **geometry) for name, cfg in SWEEP_CONFIGS.items()]


def write_sweep_csv(traces: list[SweepTrace], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "theta", "p1_x", "p1_y", "p1_z", "dp1_x", "dp1_y", "dp1_z"])
        for tr in traces:
            for th, p, d in zip(tr.theta, tr.p1, tr.dp1):
                w.writerow([tr.name, repr(float(th)), *(repr(float(x)) for x in p),
                            *(repr(float(x)) for x in d)])
