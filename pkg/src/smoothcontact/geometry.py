"""Rigid poses, collision meshes and OBJ ingestion.

A pose is a 6-vector ``[tx, ty, tz, wx, wy, wz]``: a translation followed by
an axis-angle rotation.  :func:`se3_exp` maps it to the rigid transform
``[[R(w), t], [0, 1]]`` and :func:`se3_log` inverts it.  All pose functions
broadcast over leading axes and accept :class:`~smoothcontact.dual.Dual`
inputs.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np

from .dual import primal

log = logging.getLogger(__name__)

# below this squared angle the Rodrigues coefficients switch to their Taylor
# series; terms through theta^4 keep the truncation error under 1e-18
_SMALL_ANGLE_SQ = 1e-6


def skew(w):
    z = np.zeros_like(w[..., 0])
    return np.stack([
        np.stack([z, -w[..., 2], w[..., 1]], axis=-1),
        np.stack([w[..., 2], z, -w[..., 0]], axis=-1),
        np.stack([-w[..., 1], w[..., 0], z], axis=-1),
    ], axis=-2)


def so3_exp(w):
    """Rotation matrices ``(..., 3, 3)`` from axis-angle vectors ``(..., 3)``."""
    th2 = np.sum(w * w, axis=-1)
    small = np.asarray(primal(th2) < _SMALL_ANGLE_SQ)
    th = np.sqrt(np.where(small, 1.0, th2))
    a = np.where(small, 1.0 - th2 / 6.0 + th2 * th2 / 120.0, np.sin(th) / th)
    b = np.where(small, 0.5 - th2 / 24.0 + th2 * th2 / 720.0,
                 (1.0 - np.cos(th)) / np.where(small, 1.0, th2))
    a = a[..., None, None]
    b = b[..., None, None]
    eye = np.eye(3)
    ww = w[..., :, None] * w[..., None, :]
    return eye * (1.0 - b * th2[..., None, None]) + a * skew(w) + b * ww


def so3_log(R) -> np.ndarray:
    """Axis-angle vector of a rotation matrix (plain arrays only)."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R, axis1=-2, axis2=-1)
    cos = np.clip((tr - 1.0) / 2.0, -1.0, 1.0)
    th = np.arccos(cos)
    vee = np.stack([R[..., 2, 1] - R[..., 1, 2],
                    R[..., 0, 2] - R[..., 2, 0],
                    R[..., 1, 0] - R[..., 0, 1]], axis=-1)
    sin = np.sin(th)
    small = th < 1e-4
    near_pi = th > np.pi - 1e-3
    scale = np.where(small, 0.5 + th * th / 12.0, th / (2.0 * np.where(small, 1.0, sin) + 1e-300))
    out = vee * scale[..., None]
    if np.any(near_pi):
        # axis from the symmetric part: sym(R) = cos I + (1 - cos) a a^T
        sym = (R + np.swapaxes(R, -1, -2)) / 2.0
        B = (sym - cos[..., None, None] * np.eye(3)) / (1.0 - cos[..., None, None])
        diag = np.clip(np.diagonal(B, axis1=-2, axis2=-1), 0.0, None)
        k = np.argmax(diag, axis=-1)
        col = np.take_along_axis(B, k[..., None, None].repeat(3, axis=-1), axis=-2)[..., 0, :]
        axis = col / np.sqrt(np.take_along_axis(diag, k[..., None], axis=-1))
        axis = axis * np.where(np.sum(axis * vee, axis=-1, keepdims=True) < 0, -1.0, 1.0)
        axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
        out = np.where(near_pi[..., None], axis * th[..., None], out)
    return out


def pose_rt(pose):
    """Split poses ``(..., 6)`` into ``(R, t)``."""
    return so3_exp(pose[..., 3:]), pose[..., :3]


def se3_exp(pose):
    """4x4 rigid transform(s) from pose vectors."""
    R, t = pose_rt(pose)
    top = np.concatenate([R, t[..., :, None]], axis=-1)
    bottom = np.broadcast_to(np.array([0.0, 0.0, 0.0, 1.0]), top.shape[:-2] + (1, 4))
    return np.concatenate([top, bottom], axis=-2)


def se3_log(T) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    return np.concatenate([T[..., :3, 3], so3_log(T[..., :3, :3])], axis=-1)


def compose(pose_a, pose_b) -> np.ndarray:
    """Pose of ``exp(a) @ exp(b)``."""
    return se3_log(se3_exp(np.asarray(pose_a, float)) @ se3_exp(np.asarray(pose_b, float)))


def transform_points(R, t, p):
    """Apply ``x -> R x + t`` to points ``(..., N, 3)``; ``R`` is ``(..., 3, 3)``."""
    return p @ np.swapaxes(R, -1, -2) + t[..., None, :]


def inverse_transform_points(R, t, p):
    return (p - t[..., None, :]) @ R


# -- meshes ------------------------------------------------------------------

class MeshParseError(ValueError):
    pass


@dataclass(frozen=True)
class CollisionMesh:
    vertices: np.ndarray  # (V, 3) body frame, meters
    faces: np.ndarray     # (F, 3) triangle indices
    edges: np.ndarray     # (E, 2) unique undirected, sorted pairs

    def __post_init__(self):
        V = len(self.vertices)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must be (V, 3)")
        if len(self.faces) and self.faces.max() >= V:
            raise ValueError("face index out of range")
        if len(self.edges) and self.edges.max() >= V:
            raise ValueError("edge index out of range")

    @property
    def bbox_diagonal(self) -> float:
        return float(np.linalg.norm(self.vertices.max(0) - self.vertices.min(0)))


def _unique_edges(segments: np.ndarray) -> np.ndarray:
    seg = np.sort(np.asarray(segments, dtype=np.int64).reshape(-1, 2), axis=1)
    return np.unique(seg, axis=0)


def mesh_from_polygons(vertices, polygons, polygon_edges: bool = False) -> CollisionMesh:
    """Build a mesh from triangles/quads.

    Quads are split into two triangles.  With ``polygon_edges`` the edge set
    is taken from polygon boundaries, so quad diagonals are not edges.
    """
    vertices = np.asarray(vertices, dtype=float)
    tris, boundary, tri_boundary = [], [], []
    for poly in polygons:
        poly = list(poly)
        if len(poly) == 3:
            fan = [poly]
        elif len(poly) == 4:
            fan = [[poly[0], poly[1], poly[2]], [poly[0], poly[2], poly[3]]]
        else:
            raise MeshParseError(f"only triangles and quads are supported, got {len(poly)}-gon")
        tris.extend(fan)
        boundary.extend((poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly)))
        for t in fan:
            tri_boundary.extend(((t[0], t[1]), (t[1], t[2]), (t[2], t[0])))
    faces = np.asarray(tris, dtype=np.int64).reshape(-1, 3)
    segs = boundary if polygon_edges else tri_boundary
    edges = _unique_edges(segs) if segs else np.zeros((0, 2), np.int64)

    if len(segs):
        seg = np.sort(np.asarray(segs), axis=1)
        _, counts = np.unique(seg, axis=0, return_counts=True)
        if np.any(counts > 2):
            log.warning("non-manifold mesh: %d edges shared by more than two faces",
                        int(np.sum(counts > 2)))
    return CollisionMesh(vertices, faces, edges)


def load_mesh(path: str | os.PathLike, polygon_edges: bool = False) -> CollisionMesh:
    """Read the ``v`` / ``f`` subset of a Wavefront OBJ file."""
    verts, polys = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                if parts[0] == "v":
                    verts.append([float(x) for x in parts[1:4]])
                    if len(parts) < 4:
                        raise ValueError("vertex needs 3 coordinates")
                elif parts[0] == "f":
                    idx = []
                    for tok in parts[1:]:
                        i = int(tok.split("/")[0])
                        idx.append(i - 1 if i > 0 else len(verts) + i)
                    if len(idx) not in (3, 4):
                        raise ValueError(f"face with {len(idx)} vertices")
                    polys.append(idx)
            except ValueError as exc:
                raise MeshParseError(f"{path}:{lineno}: {exc}") from None
    if not verts or not polys:
        raise MeshParseError(f"{path}: no vertices or faces found")
    for i, poly in enumerate(polys):
        if min(poly) < 0 or max(poly) >= len(verts):
            raise MeshParseError(f"{path}: face {i} references a missing vertex")
    return mesh_from_polygons(verts, polys, polygon_edges=polygon_edges)


def write_obj(mesh: CollisionMesh, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def box_mesh(size=(1.0, 1.0, 1.0), subdivisions: int = 1,
             polygon_edges: bool = True) -> CollisionMesh:
    """Axis-aligned box centered at the origin with an ``n x n`` quad grid per face.

    ``subdivisions=1`` gives the 8-vertex, 12-edge cube; ``subdivisions=4``
    gives 98 vertices.
    """
    n = int(subdivisions)
    if n < 1:
        raise ValueError("subdivisions must be >= 1")
    half = np.asarray(size, dtype=float) / 2.0
    index: dict[tuple[int, int, int], int] = {}
    verts: list[np.ndarray] = []

    def vid(c):
        if c not in index:
            index[c] = len(verts)
            verts.append((np.asarray(c, float) / n * 2.0 - 1.0) * half)
        return index[c]

    polys = []
    for axis in range(3):
        u, v = (axis + 1) % 3, (axis + 2) % 3
        for side in (0, n):
            for i in range(n):
                for j in range(n):
                    quad = []
                    for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
                        c = [0, 0, 0]
                        c[axis], c[u], c[v] = side, i + di, j + dj
                        quad.append(vid(tuple(c)))
                    if side == 0:
                        quad.reverse()
                    polys.append(quad)
    return mesh_from_polygons(np.array(verts), polys, polygon_edges=polygon_edges)
