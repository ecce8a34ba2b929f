"""A collidable surface: mesh for features, smooth SDF for queries."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .geometry import CollisionMesh, box_mesh, pose_rt, transform_points
from .sdf import PosedSdf, SmoothSdf, Superquadric

log = logging.getLogger(__name__)

# vertices further than this fraction of the bbox diagonal from the SDF zero
# set are reported as a representation mismatch
DISCREPANCY_TOL = 1e-2


@dataclass
class SurfaceModel:
    mesh: CollisionMesh
    sdf: SmoothSdf
    vertex_topk: int | None = None
    edge_topk: int | None = None
    name: str = ""

    def __post_init__(self):
        V, E = len(self.mesh.vertices), len(self.mesh.edges)
        if self.vertex_topk is not None and not 1 <= self.vertex_topk <= V:
            raise ValueError(f"vertex_topk must be in [1, {V}]")
        if self.edge_topk is not None and not 1 <= self.edge_topk <= E:
            raise ValueError(f"edge_topk must be in [1, {E}]")

    @property
    def n_vertices(self) -> int:
        """Vertices kept by the selection step (all of them by default)."""
        return self.vertex_topk or len(self.mesh.vertices)

    @property
    def n_edges(self) -> int:
        """Edges kept by the selection step; one per SDF primitive by default."""
        if self.edge_topk is not None:
            return self.edge_topk
        return min(len(self.sdf.leaves), len(self.mesh.edges))

    def discrepancy(self) -> float:
        """Largest ``|phi|`` over mesh vertices (body frame)."""
        return float(np.max(np.abs(self.sdf.value(self.mesh.vertices))))

    def check_discrepancy(self, tol: float = DISCREPANCY_TOL) -> bool:
        gap = self.discrepancy()
        ok = gap <= tol * self.mesh.bbox_diagonal
        if not ok:
            log.warning("surface %r: mesh vertices lie up to %.3g m off the SDF zero set",
                        self.name, gap)
        return ok

    def posed(self, pose) -> "PosedSurface":
        R, t = pose_rt(pose)
        return PosedSurface(self, R, t)


@dataclass
class PosedSurface:
    """World-frame view of a surface for a (possibly batched, possibly dual) pose."""

    surface: SurfaceModel
    R: object
    t: object

    @property
    def sdf(self) -> PosedSdf:
        return PosedSdf(self.surface.sdf, self.R, self.t)

    def vertices(self):
        return transform_points(self.R, self.t, self.surface.mesh.vertices)

    def edge_endpoints(self, verts=None):
        """``(..., E, 2, 3)`` world-frame edge endpoints."""
        if verts is None:
            verts = self.vertices()
        edges = self.surface.mesh.edges
        return np.stack([verts[..., edges[:, 0], :], verts[..., edges[:, 1], :]], axis=-2)


def project_to_superquadric(points, sq: Superquadric) -> np.ndarray:
    """Radially scale points onto the zero set of an unposed superquadric.

    The inside-outside function is homogeneous of degree ``2 / eps1``, so
    ``p * f(p) ** (-eps1 / 2)`` lands exactly on ``f = 1``.
    """
    p = np.asarray(points, dtype=float)
    f, _, _ = sq.inside_outside(p)
    return p * (f ** (-0.5 * sq.eps1))[..., None]


def box_surface(size=(1.0, 1.0, 1.0), eps: float = 0.1, subdivisions: int = 1,
                vertex_topk: int | None = None, edge_topk: int | None = None,
                name: str = "box") -> SurfaceModel:
    """Box as a single superquadric plus a mesh inscribed in it.

    Mesh vertices are moved onto the superquadric's zero set, so every vertex
    has ``phi = 0`` and every edge (a chord of a convex surface) stays inside.
    """
    half = np.asarray(size, dtype=float) / 2.0
    sq = Superquadric(a=half[0], b=half[1], c=half[2], eps1=eps, eps2=eps)
    raw = box_mesh(size, subdivisions=subdivisions, polygon_edges=True)
    mesh = CollisionMesh(project_to_superquadric(raw.vertices, sq), raw.faces, raw.edges)
    return SurfaceModel(mesh, SmoothSdf(sq), vertex_topk=vertex_topk,
                        edge_topk=edge_topk, name=name)
