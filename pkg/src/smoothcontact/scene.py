"""JSON scene descriptions.

A scene lists bodies (mesh + SDF tree + pose + dynamics), optional
smoothing overrides and a manifold mode.  Mesh paths are resolved relative
to the scene file.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Annotated, Literal, Optional, Union as TUnion

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import sdf as S
from .config import MODES, SmoothingConfig
from .geometry import load_mesh
from .surface import SurfaceModel, box_surface

Vec3 = tuple[float, float, float]
Pose = tuple[float, float, float, float, float, float]
ZERO_POSE: Pose = (0.0,) * 6


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SuperquadricSpec(_Strict):
    type: Literal["superquadric"]
    a: float = Field(gt=0)
    b: float = Field(gt=0)
    c: float = Field(gt=0)
    eps1: float = Field(gt=0, le=2)
    eps2: float = Field(gt=0, le=2)
    pose: Pose = ZERO_POSE

    def build(self):
        return S.Superquadric(a=self.a, b=self.b, c=self.c, eps1=self.eps1,
                              eps2=self.eps2, pose=np.array(self.pose))


class ConvexPolyhedronSpec(_Strict):
    type: Literal["convex_polyhedron"]
    normals: list[Vec3] = Field(min_length=1)
    points: list[Vec3] = Field(min_length=1)
    tau: float = Field(1e-3, gt=0)
    pose: Pose = ZERO_POSE

    def build(self):
        return S.ConvexPolyhedron(normals=np.array(self.normals), points=np.array(self.points),
                                  tau=self.tau, pose=np.array(self.pose))


class BoxPolyhedronSpec(_Strict):
    type: Literal["box_polyhedron"]
    size: Vec3
    tau: float = Field(1e-3, gt=0)
    pose: Pose = ZERO_POSE

    def build(self):
        return S.ConvexPolyhedron.box(self.size, tau=self.tau, pose=np.array(self.pose))


class PointcloudSpec(_Strict):
    type: Literal["pointcloud"]
    points: list[Vec3] = Field(min_length=1)
    normals: list[Vec3] = Field(min_length=1)
    lengthscales: TUnion[float, list[float]]
    pose: Pose = ZERO_POSE

    def build(self):
        return S.OrientedPointcloud(points=np.array(self.points), normals=np.array(self.normals),
                                    lengthscales=np.asarray(self.lengthscales, dtype=float),
                                    pose=np.array(self.pose))


class SphereSpec(_Strict):
    type: Literal["sphere"]
    radius: float = Field(gt=0)
    center: Vec3 = (0.0, 0.0, 0.0)

    def build(self):
        return S.Sphere(radius=self.radius, center=np.array(self.center))


class UnionSpec(_Strict):
    type: Literal["union"]
    children: list["SdfSpec"] = Field(min_length=1)
    tau: float = Field(1e-2, gt=0)

    def build(self):
        return S.Union([c.build() for c in self.children], tau=self.tau)


class SubtractionSpec(_Strict):
    type: Literal["subtraction"]
    positive: "SdfSpec"
    negative: "SdfSpec"
    tau: float = Field(1e-2, gt=0)

    def build(self):
        return S.Subtraction(self.positive.build(), self.negative.build(), tau=self.tau)


SdfSpec = Annotated[
    TUnion[SuperquadricSpec, ConvexPolyhedronSpec, BoxPolyhedronSpec, PointcloudSpec,
           SphereSpec, UnionSpec, SubtractionSpec],
    Field(discriminator="type"),
]
UnionSpec.model_rebuild()
SubtractionSpec.model_rebuild()


class BoxShape(_Strict):
    """Superquadric box with an inscribed quad mesh."""

    size: Vec3 = (1.0, 1.0, 1.0)
    eps: float = Field(0.1, gt=0, le=2)
    subdivisions: int = Field(1, ge=1)


class BodySpec(_Strict):
    name: str
    box: Optional[BoxShape] = None
    mesh: Optional[str] = None
    polygon_edges: bool = False
    sdf: Optional[SdfSpec] = None
    pose: Pose = ZERO_POSE
    velocity: tuple[float, float, float, float, float, float] = ZERO_POSE
    vertex_topk: Optional[int] = Field(None, ge=1)
    edge_topk: Optional[int] = Field(None, ge=1)
    mass: float = Field(1.0, gt=0)
    inertia: Optional[tuple[Vec3, Vec3, Vec3]] = None
    static: bool = False

    @model_validator(mode="after")
    def _one_geometry(self):
        if (self.box is None) == (self.mesh is None):
            raise ValueError(f"body {self.name!r}: give exactly one of 'box' or 'mesh'")
        if self.mesh is not None and self.sdf is None:
            raise ValueError(f"body {self.name!r}: a mesh body needs an 'sdf'")
        return self


class SceneSpec(_Strict):
    name: str = "scene"
    bodies: list[BodySpec] = Field(min_length=2)
    smoothing: dict[str, TUnion[float, int, bool]] = Field(default_factory=dict)
    mode: Literal["full", "no-ee", "one-sided"] = "full"
    gravity: Vec3 = (0.0, 0.0, -9.81)

    @field_validator("smoothing")
    @classmethod
    def _known_knobs(cls, v):
        unknown = set(v) - set(SmoothingConfig.field_names())
        if unknown:
            raise ValueError(f"unknown smoothing parameters: {sorted(unknown)}")
        return v


class Body:
    """A built body: surface plus initial state."""

    def __init__(self, spec: BodySpec, surface: SurfaceModel):
        self.spec = spec
        self.surface = surface
        self.name = spec.name
        self.pose = np.array(spec.pose, dtype=float)
        self.velocity = np.array(spec.velocity, dtype=float)

    def inertia(self) -> np.ndarray:
        if self.spec.inertia is not None:
            return np.array(self.spec.inertia, dtype=float)
        # solid box over the mesh bounding box
        ext = np.ptp(self.surface.mesh.vertices, axis=0)
        sq = ext ** 2
        return self.spec.mass / 12.0 * np.diag([sq[1] + sq[2], sq[0] + sq[2], sq[0] + sq[1]])


class Scene:
    def __init__(self, spec: SceneSpec, base_dir: str | os.PathLike = "."):
        self.spec = spec
        self.name = spec.name
        self.mode = spec.mode
        self.config = SmoothingConfig(**spec.smoothing)
        self.gravity = np.array(spec.gravity, dtype=float)
        self.bodies = [Body(b, _build_surface(b, Path(base_dir))) for b in spec.bodies]

    @property
    def pair(self) -> tuple[Body, Body]:
        return self.bodies[0], self.bodies[1]

    def to_json(self) -> str:
        return self.spec.model_dump_json(indent=2)


def _build_surface(spec: BodySpec, base: Path) -> SurfaceModel:
    if spec.box is not None:
        surf = box_surface(spec.box.size, spec.box.eps, spec.box.subdivisions,
                           spec.vertex_topk, spec.edge_topk, name=spec.name)
        if spec.sdf is not None:
            surf = SurfaceModel(surf.mesh, S.SmoothSdf(spec.sdf.build()), spec.vertex_topk,
                                spec.edge_topk, name=spec.name)
    else:
        path = Path(spec.mesh)
        mesh = load_mesh(path if path.is_absolute() else base / path, spec.polygon_edges)
        surf = SurfaceModel(mesh, S.SmoothSdf(spec.sdf.build()), spec.vertex_topk,
                            spec.edge_topk, name=spec.name)
    surf.check_discrepancy()
    return surf


def parse_scene(data: dict, base_dir: str | os.PathLike = ".") -> Scene:
    return Scene(SceneSpec.model_validate(data), base_dir)


def load_scene(path: str | os.PathLike) -> Scene:
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    return parse_scene(data, path.parent)


def builtin_scene_path(name: str) -> Path:
    """Path of a scene shipped with the package (``name`` without ``.json``)."""
    return Path(__file__).parent / "scenes" / f"{name}.json"


def builtin_scenes() -> list[str]:
    return sorted(p.stem for p in (Path(__file__).parent / "scenes").glob("*.json"))


__all__ = ["MODES", "Scene", "SceneSpec", "BodySpec", "load_scene", "parse_scene",
           "builtin_scene_path", "builtin_scenes"]
