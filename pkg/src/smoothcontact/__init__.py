"""Smoothly differentiable contact manifolds between mesh + SDF surfaces."""

from .config import DEFAULT, MODES, SmoothingConfig
from .dual import Dual, extract_jacobian, primal, seed_pose_tangents
from .geometry import CollisionMesh, MeshParseError, box_mesh, load_mesh, se3_exp, se3_log
from .manifold import ContactManifold, generate_manifold, manifold_size
from .scene import Scene, builtin_scenes, load_scene
from .sdf import (ConvexPolyhedron, OrientedPointcloud, SmoothSdf, Sphere, Subtraction, Superquadric,
                  Union)
from .surface import SurfaceModel, box_surface
from .witness import ee_witness, solve_box_qp_2, vf_witness

__version__ = "0.1.0"

__all__ = [
    "DEFAULT", "MODES", "SmoothingConfig",
    "Dual", "extract_jacobian", "primal", "seed_pose_tangents",
    "CollisionMesh", "MeshParseError", "box_mesh", "load_mesh", "se3_exp", "se3_log",
    "ContactManifold", "generate_manifold", "manifold_size",
    "Scene", "builtin_scenes", "load_scene",
    "ConvexPolyhedron", "OrientedPointcloud", "SmoothSdf", "Sphere", "Subtraction", "Superquadric", "Union",
    "SurfaceModel", "box_surface",
    "ee_witness", "solve_box_qp_2", "vf_witness",
]
