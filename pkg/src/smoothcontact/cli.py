"""Command-line entry point: ``smoothcontact <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import bench as B
from .config import MODES, SmoothingConfig
from .demosim import RigidBodyState, Simulation, write_trajectory_csv
from .geometry import MeshParseError
from .gradcheck import check_pose_gradient
from .io import write_manifold_csv, write_manifold_json
from .manifold import generate_manifold
from .scene import Scene, builtin_scene_path, load_scene
from .surface import SurfaceModel
from .sweep import run_all, write_sweep_csv

TAU_FIELDS = [f for f in SmoothingConfig.field_names() if f.startswith("tau_")]


class CliError(Exception):
    pass


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers 'A,B', got {text!r}")
    return a, b


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _resolve_scene(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    builtin = builtin_scene_path(name)
    if builtin.exists():
        return builtin
    raise CliError(f"scene not found: {name}")


def _load(name: str) -> Scene:
    return load_scene(_resolve_scene(name))


def _add_smoothing_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("smoothing overrides")
    for f in TAU_FIELDS:
        g.add_argument(f"--{f.replace('_', '-')}", dest=f, type=float, metavar="V")
    g.add_argument("--lambda", dest="lam", type=float, metavar="V")
    g.add_argument("--hard-qp", action="store_true", default=None)
    g.add_argument("--mode", choices=MODES)


def _config(scene: Scene, args) -> SmoothingConfig:
    changes = {f: getattr(args, f) for f in TAU_FIELDS + ["lam", "hard_qp"]
               if getattr(args, f, None) is not None}
    return scene.config.replace(**changes)


def _surfaces(scene: Scene, args) -> tuple[SurfaceModel, SurfaceModel]:
    s1, s2 = scene.bodies[args.bodies[0]].surface, scene.bodies[args.bodies[1]].surface
    vk = getattr(args, "topk_verts", None) or (s1.vertex_topk, s2.vertex_topk)
    ek = getattr(args, "topk_edges", None) or (s1.edge_topk, s2.edge_topk)
    return (SurfaceModel(s1.mesh, s1.sdf, vk[0], ek[0], s1.name),
            SurfaceModel(s2.mesh, s2.sdf, vk[1], ek[1], s2.name))


def _poses(scene: Scene, args):
    return scene.bodies[args.bodies[0]].pose, scene.bodies[args.bodies[1]].pose


def _check_bodies(scene: Scene, args) -> None:
    n = len(scene.bodies)
    if not all(0 <= i < n for i in args.bodies) or args.bodies[0] == args.bodies[1]:
        raise CliError(f"--bodies must name two distinct bodies in [0, {n})")


# -- commands ---------------------------------------------------------------------

def cmd_scene(args) -> int:
    text = _load(args.scene).to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_manifold(args) -> int:
    scene = _load(args.scene)
    _check_bodies(scene, args)
    cfg = _config(scene, args)
    mode = args.mode or scene.mode
    s1, s2 = _surfaces(scene, args)
    p1, p2 = _poses(scene, args)
    m = generate_manifold(s1, p1, s2, p2, cfg, mode)
    out = Path(args.out)
    if out.suffix.lower() == ".json":
        meta = {"scene": scene.name, "mode": mode, "bodies": [s1.name, s2.name],
                "config": {f: getattr(cfg, f) for f in cfg.field_names()}}
        write_manifold_json(m, out, meta)
    else:
        write_manifold_csv(m, out)
    act = np.asarray(m.activity)
    print(f"{len(m)} contacts ({int(np.sum(act > 0.5))} with activity > 0.5) -> {out}")
    return 0


def cmd_sweep(args) -> int:
    traces = run_all(args.steps)
    write_sweep_csv(traces, args.out)
    for tr in traces:
        print(f"{tr.name}: max adjacent jump {tr.max_jump():.4g}, max |dp/dtheta| {tr.max_rate():.4g}")
    return 0


def cmd_bench(args) -> int:
    surfaces = poses = None
    if args.kind == "manifold":
        scene = _load(args.scene)
        _check_bodies(scene, args)
        surfaces = _surfaces(scene, args)
        poses = _poses(scene, args)
    records = []
    for variant in args.variants:
        if variant not in B.VARIANTS:
            raise CliError(f"unknown variant {variant!r}; choose from {B.VARIANTS}")
        for n in args.batch:
            r = B.benchmark(args.kind, variant, n, seed=args.seed, repetitions=args.repetitions,
                            workers=args.workers, surfaces=surfaces, poses=poses)
            print(f"{r.kind} {r.variant:9s} batch={r.batch_size:<9d} "
                  f"median={r.median_s:.4g}s std={r.std_s:.2g}s throughput={r.throughput:.4g}/s")
            records.append(r)
    if args.out:
        B.write_bench_csv(records, args.out)
    return 0


def cmd_gradcheck(args) -> int:
    scene = _load(args.scene)
    _check_bodies(scene, args)
    cfg = _config(scene, args)
    s1, s2 = _surfaces(scene, args)
    p1, p2 = _poses(scene, args)
    r = check_pose_gradient(s1, p1, s2, p2, cfg, args.mode or scene.mode)
    with np.printoptions(precision=6, linewidth=120):
        print("value       ", r.value)
        print("forward     ", r.forward)
        print("finite diff ", r.finite_diff)
    ok = r.passed(args.tol)
    print(f"max relative error {r.max_rel_error:.3e} ({'pass' if ok else 'FAIL'}, tol {args.tol:g})")
    return 0 if ok else 1


def cmd_demosim(args) -> int:
    if not 0 < args.dt <= 0.01:
        raise CliError("--dt must lie in (0, 0.01]")
    scene = _load(args.scene)
    cfg = _config(scene, args)
    states = [RigidBodyState(b.pose, b.velocity, b.spec.mass, b.inertia(), b.spec.static)
              for b in scene.bodies]
    sim = Simulation([b.surface for b in scene.bodies], states, cfg, args.mode or scene.mode,
                     gravity=scene.gravity)
    try:
        traj = sim.run(args.duration, args.dt, args.record_every)
    except FloatingPointError as e:
        print(f"simulation unstable: {e}", file=sys.stderr)
        return 3
    write_trajectory_csv(traj, [b.name for b in scene.bodies], args.out)
    vmax = max(float(np.max(np.abs(s.velocity))) for _, st in traj for s in st)
    print(f"simulated {sim.time:.3f}s, {len(traj)} records, max speed component {vmax:.3g} -> {args.out}")
    return 0


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smoothcontact",
                                description="Differentiable contact manifolds from mesh + SDF surfaces.")
    sub = p.add_subparsers(dest="command", required=True)

    def scene_cmd(name, help_text, needs_scene=True):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--scene", required=needs_scene,
                        help="scene JSON path or the name of a built-in scene")
        sp.add_argument("--bodies", type=_pair, default=(0, 1), metavar="I,J",
                        help="which two bodies of the scene to pair (default 0,1)")
        return sp

    sp = sub.add_parser("scene", help="validate a scene and echo it as JSON")
    sp.add_argument("--scene", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scene)

    sp = scene_cmd("manifold", "write the contact manifold of a body pair")
    sp.add_argument("--out", required=True, help="output file; .json for JSON, otherwise CSV")
    sp.add_argument("--topk-verts", type=_pair, metavar="N1,N2")
    sp.add_argument("--topk-edges", type=_pair, metavar="M1,M2")
    _add_smoothing_flags(sp)
    sp.set_defaults(func=cmd_manifold)

    sp = sub.add_parser("edge-sweep", help="rotating-edge witness sweep (CSV)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--steps", type=int, default=10_000, help="samples on [0, pi] (default 10000)")
    sp.set_defaults(func=cmd_sweep)

    sp = scene_cmd("bench", "time batched witness or manifold queries", needs_scene=False)
    sp.add_argument("--kind", choices=B.KINDS, default="ee")
    sp.add_argument("--batch", type=_int_list, default=[1000, 10000, 100000], metavar="N,...")
    sp.add_argument("--variants", type=lambda s: s.split(","), default=["smooth", "hard"],
                    metavar="V,...")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--repetitions", type=int, default=B.MIN_REPETITIONS)
    sp.add_argument("--topk-verts", type=_pair, metavar="N1,N2")
    sp.add_argument("--topk-edges", type=_pair, metavar="M1,M2")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench, scene_default="box_on_box_45")

    sp = scene_cmd("gradcheck", "compare forward-mode and finite-difference pose gradients")
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.add_argument("--topk-verts", type=_pair, metavar="N1,N2")
    sp.add_argument("--topk-edges", type=_pair, metavar="M1,M2")
    _add_smoothing_flags(sp)
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("demosim", help="run the penalty-contact demo simulation")
    sp.add_argument("--scene", required=True)
    sp.add_argument("--duration", type=float, default=2.0)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--record-every", type=int, default=10)
    sp.add_argument("--out", required=True)
    _add_smoothing_flags(sp)
    sp.set_defaults(func=cmd_demosim)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "scene", "") is None and hasattr(args, "scene_default"):
        args.scene = args.scene_default
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"scene schema error:\n{e}", file=sys.stderr)
        return 2
    except (CliError, MeshParseError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
