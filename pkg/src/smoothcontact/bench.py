"""Throughput benchmarks for witness queries and manifold generation.

Problems are structure-of-arrays batches drawn from a seeded generator.
Large batches are split into fixed-size chunks; chunks may be evaluated on
several threads, and because the chunking does not depend on the worker
count, neither do the results.
"""

from __future__ import annotations

import csv
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable

import numpy as np

from .config import SmoothingConfig
from .manifold import generate_manifold
from .witness import ee_witness, vf_witness

BENCH_SCHEMA_VERSION = 1
KINDS = ("ee", "vf", "manifold")
VARIANTS = ("smooth", "hard", "no_ee", "one_sided")
DEFAULT_CHUNK = 1 << 16
WARMUP_RUNS = 3
MIN_REPETITIONS = 10

# witness configurations per variant; the manifold variants also pick a mode
VARIANT_CONFIGS = {
    "smooth": (SmoothingConfig(), "full"),
    "hard": (SmoothingConfig.no_smoothing(), "full"),
    "no_ee": (SmoothingConfig(), "no-ee"),
    "one_sided": (SmoothingConfig(), "one-sided"),
}


@dataclass
class BenchRecord:
    schema_version: int
    kind: str
    variant: str
    batch_size: int
    repetitions: int
    workers: int
    median_s: float
    std_s: float
    throughput: float   # queries per second at the median

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


# -- problem generation -------------------------------------------------------

def ee_problems(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``n`` edge pairs with endpoints uniform in the unit cube."""
    pts = np.random.default_rng(seed).random((n, 4, 3))
    return pts[:, :2], pts[:, 2:]


def vf_problems(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``n`` vertex / triangle pairs with points uniform in the unit cube."""
    pts = np.random.default_rng(seed).random((n, 4, 3))
    return pts[:, 0], pts[:, 1:]


def pose_problems(n: int, pose1, pose2, seed: int = 0, scale: float = 0.02):
    """``n`` jittered copies of a pose pair, shapes ``(n, 6)``."""
    jit = scale * np.random.default_rng(seed).standard_normal((2, n, 6))
    return np.asarray(pose1, dtype=float) + jit[0], np.asarray(pose2, dtype=float) + jit[1]


# -- chunked evaluation ---------------------------------------------------------

def evaluate_chunked(fn: Callable, arrays: tuple, chunk: int = DEFAULT_CHUNK,
                     workers: int = 1) -> np.ndarray:
    """Apply ``fn`` to aligned chunks of ``arrays`` and concatenate.

    ``fn`` must return a single array whose first axis is the batch axis.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    n = len(arrays[0])
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]

    def run(b):
        return fn(*(a[b[0]:b[1]] for a in arrays))

    if workers == 1 or len(bounds) == 1:
        parts = [run(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, bounds))
    return np.concatenate(parts, axis=0)


def ee_kernel(cfg: SmoothingConfig) -> Callable:
    def fn(e1, e2):
        w = ee_witness(e1, e2, cfg)
        return np.concatenate([w.p1, w.p2], axis=-1)
    return fn


def vf_kernel(cfg: SmoothingConfig) -> Callable:
    def fn(v, tri):
        return vf_witness(v, tri, cfg)
    return fn


def manifold_kernel(s1, s2, cfg: SmoothingConfig, mode: str) -> Callable:
    def fn(pose1, pose2):
        m = generate_manifold(s1, pose1, s2, pose2, cfg, mode)
        return np.concatenate([m.dist, m.activity], axis=-1)
    return fn


# -- timing ---------------------------------------------------------------------

def time_call(fn: Callable, repetitions: int = MIN_REPETITIONS,
              warmup: int = WARMUP_RUNS) -> list[float]:
    for _ in range(warmup):
        fn()
    out = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return out


def benchmark(kind: str, variant: str, batch_size: int, *, seed: int = 0,
              repetitions: int = MIN_REPETITIONS, workers: int = 1,
              chunk: int = DEFAULT_CHUNK, surfaces=None, poses=None) -> BenchRecord:
    """Time one (kind, variant, batch size) cell.

    ``manifold`` needs ``surfaces=(s1, s2)`` and base ``poses=(p1, p2)``.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if repetitions < MIN_REPETITIONS:
        raise ValueError(f"need at least {MIN_REPETITIONS} repetitions")
    cfg, mode = VARIANT_CONFIGS[variant]
    if kind == "ee":
        arrays, fn = ee_problems(batch_size, seed), ee_kernel(cfg)
    elif kind == "vf":
        arrays, fn = vf_problems(batch_size, seed), vf_kernel(cfg)
    else:
        if surfaces is None or poses is None:
            raise ValueError("manifold benchmarks need surfaces and poses")
        arrays = pose_problems(batch_size, *poses, seed=seed)
        fn = manifold_kernel(*surfaces, cfg, mode)
    times = time_call(lambda: evaluate_chunked(fn, arrays, chunk, workers), repetitions)
    med = statistics.median(times)
    return BenchRecord(BENCH_SCHEMA_VERSION, kind, variant, batch_size, repetitions, workers,
                       med, statistics.stdev(times), batch_size / med)


def write_bench_csv(records: list[BenchRecord], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BenchRecord.columns())
        w.writeheader()
        for r in records:
            w.writerow(asdict(r))
