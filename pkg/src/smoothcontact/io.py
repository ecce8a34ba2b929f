"""Manifold serialization (CSV and JSON)."""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .dual import primal
from .manifold import EE, ContactManifold

MANIFOLD_COLUMNS = ["index", "kind", "owner", "src_a", "src_b",
                    "x", "y", "z", "dist", "nx", "ny", "nz", "activity"]


def manifold_records(m: ContactManifold) -> list[dict]:
    """One dict per contact; the manifold must be unbatched."""
    pts = np.asarray(primal(m.points))
    if pts.ndim != 2:
        raise ValueError("only unbatched manifolds can be serialized")
    dist = np.asarray(primal(m.dist))
    nrm = np.asarray(primal(m.normal))
    act = np.asarray(primal(m.activity))
    src = np.asarray(m.src)
    rows = []
    for i in range(len(m)):
        rows.append({
            "index": i,
            "kind": "EE" if m.kind[i] == EE else "VS",
            "owner": int(m.owner[i]),
            "src_a": int(src[i, 0]),
            "src_b": int(src[i, 1]),
            "x": float(pts[i, 0]), "y": float(pts[i, 1]), "z": float(pts[i, 2]),
            "dist": float(dist[i]),
            "nx": float(nrm[i, 0]), "ny": float(nrm[i, 1]), "nz": float(nrm[i, 2]),
            "activity": float(act[i]),
        })
    return rows


def write_manifold_csv(m: ContactManifold, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=MANIFOLD_COLUMNS)
        w.writeheader()
        w.writerows(manifold_records(m))


def write_manifold_json(m: ContactManifold, path: str | os.PathLike, meta: dict | None = None) -> None:
    doc = {"meta": meta or {}, "contacts": manifold_records(m)}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def read_manifold_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
