"""A small penalty-contact rigid-body integrator.

Each contact pushes its owning body along the contact normal with a
spring-damper force scaled by the contact activity, plus viscous friction
capped by a Coulomb cone.  The opposite force acts on the other body at the
same point, so linear momentum is exchanged exactly.  Integration is
semi-implicit Euler: velocities first, then poses with the new velocities.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .config import SmoothingConfig
from .geometry import so3_exp, so3_log
from .manifold import ContactManifold, generate_manifold
from .smoothops import softplus_s
from .surface import SurfaceModel


@dataclass
class RigidBodyState:
    pose: np.ndarray                 # [t, w], world frame
    velocity: np.ndarray             # [v, omega], world frame
    mass: float = 1.0
    inertia: np.ndarray = field(default_factory=lambda: np.eye(3) / 6.0)
    static: bool = False

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=float).copy()
        self.velocity = np.asarray(self.velocity, dtype=float).copy()
        self.inertia = np.asarray(self.inertia, dtype=float)
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if not np.allclose(self.inertia, self.inertia.T, atol=1e-12):
            raise ValueError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(self.inertia) <= 0):
            raise ValueError("inertia must be positive definite")

    def point_velocity(self, p) -> np.ndarray:
        return self.velocity[:3] + np.cross(self.velocity[3:], p - self.pose[:3])

    def kinetic_energy(self) -> float:
        if self.static:
            return 0.0
        R = so3_exp(self.pose[3:])
        w = self.velocity[3:]
        return 0.5 * self.mass * self.velocity[:3] @ self.velocity[:3] + 0.5 * w @ (R @ self.inertia @ R.T) @ w


@dataclass(frozen=True)
class ContactParams:
    stiffness: float = 2e4      # N per unit of signed distance
    damping: float = 50.0       # N s/m along the normal
    friction: float = 0.5       # Coulomb coefficient
    viscous_friction: float = 20.0   # N s/m, tangential slope below the cone
    tau_force: float = 1e-4     # softplus rounding of max(-dist, 0)

    def __post_init__(self):
        if self.stiffness < 0 or self.damping < 0 or self.friction < 0 or self.viscous_friction < 0:
            raise ValueError("contact parameters must be non-negative")


def contact_forces(m: ContactManifold, s1: RigidBodyState, s2: RigidBodyState,
                   params: ContactParams = ContactParams()) -> np.ndarray:
    """Force ``(K, 3)`` on each contact's owner; the other body gets the negative."""
    pts = np.asarray(m.points)
    n = np.asarray(m.normal)
    act = np.asarray(m.activity)
    depth = softplus_s(-np.asarray(m.dist), params.tau_force)
    states = (s1, s2)
    forces = np.zeros_like(pts)
    for i in np.flatnonzero(act > 1e-9):
        own, other = states[m.owner[i]], states[1 - m.owner[i]]
        vrel = own.point_velocity(pts[i]) - other.point_velocity(pts[i])
        vn = vrel @ n[i]
        fn = max(act[i] * (params.stiffness * depth[i] - params.damping * vn), 0.0)
        vt = vrel - vn * n[i]
        speed = np.linalg.norm(vt)
        ft = np.zeros(3)
        if speed > 0:
            ft = -vt * min(params.viscous_friction * act[i], params.friction * fn / speed)
        forces[i] = fn * n[i] + ft
    return forces


def penalty_forces(m: ContactManifold, s1: RigidBodyState, s2: RigidBodyState,
                   params: ContactParams = ContactParams()) -> tuple[np.ndarray, np.ndarray]:
    """World-frame wrenches ``[f, torque]`` on both bodies about their centers."""
    f = contact_forces(m, s1, s2, params)
    pts = np.asarray(m.points)
    sign = np.where(m.owner == 0, 1.0, -1.0)[:, None]
    f1, f2 = sign * f, -sign * f
    w1 = np.concatenate([f1.sum(0), np.cross(pts - s1.pose[:3], f1).sum(0)])
    w2 = np.concatenate([f2.sum(0), np.cross(pts - s2.pose[:3], f2).sum(0)])
    return w1, w2


def step(states: list[RigidBodyState], wrenches: list[np.ndarray], dt: float,
         gravity=(0.0, 0.0, -9.81)) -> list[RigidBodyState]:
    """One semi-implicit Euler step; returns new states."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    g = np.asarray(gravity, dtype=float)
    out = []
    for s, w in zip(states, wrenches):
        if s.static:
            out.append(s)
            continue
        R = so3_exp(s.pose[3:])
        Iw = R @ s.inertia @ R.T
        v = s.velocity[:3] + dt * (w[:3] / s.mass + g)
        om = s.velocity[3:]
        om = om + dt * np.linalg.solve(Iw, w[3:] - np.cross(om, Iw @ om))
        t = s.pose[:3] + dt * v
        Rn = so3_exp(dt * om) @ R
        out.append(RigidBodyState(np.concatenate([t, so3_log(Rn)]), np.concatenate([v, om]),
                                  s.mass, s.inertia, s.static))
    return out


class Simulation:
    """Bodies with surfaces, stepped with all-pairs contact."""

    def __init__(self, surfaces: list[SurfaceModel], states: list[RigidBodyState],
                 cfg: SmoothingConfig = SmoothingConfig(), mode: str = "full",
                 params: ContactParams = ContactParams(), gravity=(0.0, 0.0, -9.81),
                 broadphase_margin: float = 0.05):
        if len(surfaces) != len(states):
            raise ValueError("one state per surface")
        self.surfaces, self.states = surfaces, list(states)
        self.cfg, self.mode, self.params = cfg, mode, params
        self.gravity = np.asarray(gravity, dtype=float)
        self.time = 0.0
        self.broadphase_margin = broadphase_margin
        self.pairs = [(i, j) for i in range(len(states)) for j in range(i + 1, len(states))
                      if not (states[i].static and states[j].static)]

    def _bounds(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        s = self.states[i]
        v = self.surfaces[i].mesh.vertices @ so3_exp(s.pose[3:]).T + s.pose[:3]
        return v.min(0), v.max(0)

    def _far_apart(self, i: int, j: int) -> bool:
        # mesh boxes separated by more than the margin: every contact force
        # would be negligible, so skip the pair
        lo_i, hi_i = self._bounds(i)
        lo_j, hi_j = self._bounds(j)
        gap = np.maximum(lo_i - hi_j, lo_j - hi_i)
        return bool(np.any(gap > self.broadphase_margin))

    def wrenches(self) -> list[np.ndarray]:
        w = [np.zeros(6) for _ in self.states]
        for i, j in self.pairs:
            if self._far_apart(i, j):
                continue
            si, sj = self.states[i], self.states[j]
            m = generate_manifold(self.surfaces[i], si.pose, self.surfaces[j], sj.pose,
                                  self.cfg, self.mode)
            wi, wj = penalty_forces(m, si, sj, self.params)
            w[i] += wi
            w[j] += wj
        return w

    def step(self, dt: float) -> None:
        self.states = step(self.states, self.wrenches(), dt, self.gravity)
        self.time += dt
        for s in self.states:
            if not (np.all(np.isfinite(s.pose)) and np.all(np.isfinite(s.velocity))):
                raise FloatingPointError(f"non-finite state at t={self.time:.4f}")

    def run(self, duration: float, dt: float, record_every: int = 1) -> list[tuple[float, list]]:
        """Step for ``duration`` seconds, recording ``(time, states)`` snapshots."""
        if not 0 < dt <= 0.01:
            raise ValueError("dt must lie in (0, 0.01]")
        n = int(round(duration / dt))
        traj = [(self.time, self.states)]
        for k in range(1, n + 1):
            self.step(dt)
            if k % record_every == 0 or k == n:
                traj.append((self.time, self.states))
        return traj


def write_trajectory_csv(traj, names: list[str], path: str | os.PathLike) -> None:
    cols = ["time"]
    for nm in names:
        cols += [f"{nm}_{c}" for c in ("tx", "ty", "tz", "wx", "wy", "wz",
                                       "vx", "vy", "vz", "ox", "oy", "oz")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for t, states in traj:
            row = [repr(float(t))]
            for s in states:
                row += [repr(float(x)) for x in np.concatenate([s.pose, s.velocity])]
            w.writerow(row)
