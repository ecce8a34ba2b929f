"""Contact manifold generation between two posed surfaces.

The manifold has a fixed layout for a given pair of surfaces and mode:

* ``full``: V-S contacts of surface 1, V-S contacts of surface 2, then two
  E-E contacts (side 1, side 2) for every selected edge pair ``(k, l)`` in
  row-major order;
* ``no-ee``: the two V-S blocks only;
* ``one-sided``: the V-S block of surface 1 only.

Every quantity is a smooth function of both poses, so passing dual poses
gives pose derivatives of points, distances, normals and activities.  Poses
may carry leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, MODES, SmoothingConfig
from .dual import primal
from .sdf import PosedSdf, sphere_trace_project
from .smoothops import sigmoid, sign_s, soft_topk, softmax, topk_hard
from .surface import SurfaceModel
from .witness import ee_witness

VS, EE = 0, 1


@dataclass
class ContactPoint:
    point: np.ndarray
    dist: float
    normal: np.ndarray
    activity: float
    kind: int
    owner: int
    src: tuple[int, int]


@dataclass
class ContactManifold:
    """Structure of arrays; ``K`` is fixed by the surfaces and the mode.

    ``owner`` is the surface (0 or 1) the contact point belongs to: its
    normal pushes that surface out of the other one.  ``src`` holds the
    vertex index (and -1) for V-S rows and the edge indices ``(k, l)`` for
    E-E rows; with soft selection these are the dominant source entries.
    """

    points: object    # (..., K, 3)
    dist: object      # (..., K)
    normal: object    # (..., K, 3)
    activity: object  # (..., K)
    kind: np.ndarray   # (K,)
    owner: np.ndarray  # (K,)
    src: np.ndarray    # (..., K, 2)

    def __len__(self):
        return len(self.kind)

    def contact(self, i: int) -> ContactPoint:
        return ContactPoint(np.asarray(primal(self.points))[i], float(primal(self.dist)[i]),
                            np.asarray(primal(self.normal))[i], float(primal(self.activity)[i]),
                            int(self.kind[i]), int(self.owner[i]), tuple(int(s) for s in self.src[i]))


@dataclass
class EeIndicatorMatrices:
    """Per-pair factors of the E-E activity, each ``(..., M1, M2)``."""

    D: object
    con: object
    pen: tuple
    nn: tuple
    clash: object
    safe: object
    gamma: tuple


def manifold_size(s1: SurfaceModel, s2: SurfaceModel, mode: str = "full") -> int:
    if mode == "one-sided":
        return s1.n_vertices
    n = s1.n_vertices + s2.n_vertices
    return n + 2 * s1.n_edges * s2.n_edges if mode == "full" else n


def vertex_penetrations(verts, opposing: PosedSdf, tau_n: float = 1e-6):
    return opposing.evaluate(verts, tau_n)[0]


def edge_penetrations(vert_pens, edges):
    """Mean of the two endpoint penetrations."""
    edges = np.asarray(edges)
    return 0.5 * (vert_pens[..., edges[:, 0]] + vert_pens[..., edges[:, 1]])


def select_topk(positions, scores, k: int, tau: float, hard: bool = False):
    """Softly pick the ``k`` highest-scoring rows of ``positions``.

    ``positions`` is ``(..., D, 3)`` or ``(..., D, 2, 3)``.  Returns the
    blended payload ``(..., k, ...)``, the selection matrix ``(..., k, D)``
    (``None`` when every row is kept) and the dominant source index per row.
    """
    d = np.shape(scores)[-1]
    if not 1 <= k <= d:
        raise ValueError(f"top-k count must satisfy 1 <= k <= {d}, got {k}")
    batch = np.shape(scores)[:-1]
    if k == d:
        return positions, None, np.broadcast_to(np.arange(d), batch + (d,))
    sel = topk_hard(scores, k) if hard else soft_topk(scores, k, tau)
    shape = np.shape(positions)
    payload = sel @ positions.reshape(batch + (d, -1))
    return payload.reshape(batch + (k,) + shape[len(batch) + 1:]), sel, np.argmax(primal(sel), axis=-1)


def vs_contacts(verts, opposing: PosedSdf, cfg: SmoothingConfig = DEFAULT):
    """``(points, dist, normal, activity)`` of vertices against an opposing SDF."""
    phi, _, n = opposing.evaluate(verts, cfg.tau_normal)
    return verts, phi, n, sigmoid(-phi / cfg.tau_pen)


def _pair_norm(v, eps):
    """``(|v|^2 / sqrt(|v|^2 + eps), v / sqrt(|v|^2 + eps))``: smooth at zero."""
    sq = np.sum(v * v, axis=-1)
    inv = 1.0 / np.sqrt(sq + eps)
    return sq * inv, v * inv[..., None]


def ee_contacts(E1, E2, sdf1: PosedSdf, sdf2: PosedSdf, cfg: SmoothingConfig = DEFAULT):
    """Contacts for all selected edge pairs.

    ``E1 (..., M1, 2, 3)`` and ``E2 (..., M2, 2, 3)`` are world-frame edge
    endpoints.  Returns ``(p1, p2, d, n, activity, indicators)`` where
    ``d``, ``n`` and ``activity`` are tuples over the two sides and every
    array has pair axes ``(..., M1, M2)``.
    """
    e1 = E1[..., :, None, :, :]
    e2 = E2[..., None, :, :, :]
    wit = ee_witness(e1, e2, cfg)
    p1, p2 = wit.p1, wit.p2

    safe = 1.0
    if cfg.safeguard:
        # own-surface containment of the raw witness points
        safe = (sigmoid(-sdf1.evaluate(p1, cfg.tau_normal)[0] / cfg.tau_safe)
                * sigmoid(-sdf2.evaluate(p2, cfg.tau_normal)[0] / cfg.tau_safe))

    if cfg.project_witness and cfg.trace_iters > 0:
        p1 = sphere_trace_project(sdf1, p1, cfg.trace_iters, cfg.tau_trace, cfg.tau_normal)
        p2 = sphere_trace_project(sdf2, p2, cfg.trace_iters, cfg.tau_trace, cfg.tau_normal)

    D, nbar = _pair_norm(p1 - p2, cfg.ee_eps)
    _, _, n1 = sdf1.evaluate(p1, cfg.tau_normal)
    _, _, n2 = sdf2.evaluate(p2, cfg.tau_normal)
    phi2_at_1 = sdf2.evaluate(p1, cfg.tau_normal)[0]
    phi1_at_2 = sdf1.evaluate(p2, cfg.tau_normal)[0]

    # side 2 sees the pair from the other end, so its unsigned normal is -nbar
    g1 = sign_s(np.sum(n2 * nbar, axis=-1), cfg.tau_sign)
    g2 = sign_s(-np.sum(n1 * nbar, axis=-1), cfg.tau_sign)
    d = (g1 * D, g2 * D)
    n = (g1[..., None] * nbar, -g2[..., None] * nbar)

    pen = (sigmoid(-phi2_at_1 / cfg.tau_pen), sigmoid(-phi1_at_2 / cfg.tau_pen))
    nn = (softmax(-D, cfg.tau_nn, axis=-1), softmax(-D, cfg.tau_nn, axis=-2))
    clash = sigmoid(-np.sum(n1 * n2, axis=-1) / cfg.tau_clash)
    con = wit.gamma_con
    act = tuple(con * pen[b] * nn[b] * clash * safe for b in range(2))
    ind = EeIndicatorMatrices(D, con, pen, nn, clash, safe, act)
    return p1, p2, d, n, act, ind


def _flatten_pairs(x, batch_nd):
    """``(..., M1, M2, *rest)`` to ``(..., M1 * M2, *rest)``."""
    shape = np.shape(x)
    return x.reshape(shape[:batch_nd] + (-1,) + shape[batch_nd + 2:])


def _interleave(a, b, batch_nd):
    """Row-major pairs, side 1 then side 2: ``(..., 2 * M1 * M2, *rest)``."""
    a, b = _flatten_pairs(a, batch_nd), _flatten_pairs(b, batch_nd)
    st = np.stack([a, b], axis=batch_nd + 1)
    shape = np.shape(st)
    return st.reshape(shape[:batch_nd] + (-1,) + shape[batch_nd + 2:])


def generate_manifold(s1: SurfaceModel, pose1, s2: SurfaceModel, pose2,
                      cfg: SmoothingConfig = DEFAULT, mode: str = "full",
                      return_indicators: bool = False):
    """Contact manifold between ``s1`` at ``pose1`` and ``s2`` at ``pose2``.

    Poses are ``(..., 6)`` vectors ``[t, w]``; both must share batch axes.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    b1, b2 = s1.posed(pose1), s2.posed(pose2)
    sdf1, sdf2 = b1.sdf, b2.sdf
    batch_nd = np.ndim(primal(pose1)) - 1
    batch = np.shape(primal(pose1))[:-1]
    hard = cfg.hard_qp

    v1 = b1.vertices()
    pen1 = vertex_penetrations(v1, sdf2, cfg.tau_normal)
    blocks = []

    def vs_block(verts, pens, surf, opposing, owner):
        sel, _, src = select_topk(verts, -pens, surf.n_vertices, cfg.tau_topk_vertex, hard)
        pts, dist, nrm, act = vs_contacts(sel, opposing, cfg)
        src2 = np.stack([src, np.full(src.shape, -1)], axis=-1)
        blocks.append((pts, dist, nrm, act, VS, owner, src2))

    vs_block(v1, pen1, s1, sdf2, 0)
    if mode != "one-sided":
        v2 = b2.vertices()
        pen2 = vertex_penetrations(v2, sdf1, cfg.tau_normal)
        vs_block(v2, pen2, s2, sdf1, 1)

    indicators = None
    if mode == "full":
        ep1 = edge_penetrations(pen1, s1.mesh.edges)
        ep2 = edge_penetrations(pen2, s2.mesh.edges)
        E1, _, k_src = select_topk(b1.edge_endpoints(v1), -ep1, s1.n_edges, cfg.tau_topk_edge, hard)
        E2, _, l_src = select_topk(b2.edge_endpoints(v2), -ep2, s2.n_edges, cfg.tau_topk_edge, hard)
        p1, p2, d, n, act, indicators = ee_contacts(E1, E2, sdf1, sdf2, cfg)
        M1, M2 = s1.n_edges, s2.n_edges
        kk = np.broadcast_to(k_src[..., :, None], batch + (M1, M2))
        ll = np.broadcast_to(l_src[..., None, :], batch + (M1, M2))
        src = np.stack([kk, ll], axis=-1)
        blocks.append((
            _interleave(p1, p2, batch_nd),
            _interleave(d[0], d[1], batch_nd),
            _interleave(n[0], n[1], batch_nd),
            _interleave(act[0], act[1], batch_nd),
            EE,
            np.tile([0, 1], M1 * M2),
            _interleave(src, src, batch_nd),
        ))

    kinds, owners = [], []
    for blk in blocks:
        count = np.shape(blk[1])[-1]
        kinds.append(np.full(count, blk[4]))
        owners.append(np.broadcast_to(blk[5], (count,)))
    cat = batch_nd
    out = ContactManifold(
        points=np.concatenate([blk[0] for blk in blocks], axis=cat),
        dist=np.concatenate([blk[1] for blk in blocks], axis=cat),
        normal=np.concatenate([blk[2] for blk in blocks], axis=cat),
        activity=np.concatenate([blk[3] for blk in blocks], axis=cat),
        kind=np.concatenate(kinds),
        owner=np.concatenate(owners).astype(int),
        src=np.concatenate([np.asarray(blk[6]) for blk in blocks], axis=cat),
    )
    if return_indicators:
        return out, indicators
    return out
