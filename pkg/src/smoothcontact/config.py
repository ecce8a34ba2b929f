"""Named smoothing temperatures and regularization weights."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class SmoothingConfig:
    """One knob per relaxed operator in the pipeline.

    Temperatures are in the units of the quantity they soften: ``tau_clip``,
    ``tau_min`` and ``tau_comp`` act on the dimensionless edge parameters of
    the witness QP, ``tau_pen`` / ``tau_nn`` / ``tau_safe`` on distances in
    meters, ``tau_sign`` and ``tau_clash`` on dot products of unit normals.
    """

    lam: float = 0.01
    tau_clip: float = 0.1
    tau_min: float = 0.1
    tau_comp: float = 0.1
    hard_qp: bool = False

    tau_topk_vertex: float = 0.01
    tau_topk_edge: float = 0.01
    tau_pen: float = 0.01
    tau_sign: float = 0.1
    tau_nn: float = 0.01
    tau_clash: float = 0.1
    tau_safe: float = 0.01
    tau_normal: float = 1e-6
    ee_eps: float = 1e-12

    project_witness: bool = True
    trace_iters: int = 5
    tau_trace: float = 1e-2
    safeguard: bool = True

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if f.name.startswith("tau_") and not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be > 0")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.trace_iters < 0:
            raise ValueError("trace_iters must be >= 0")

    def replace(self, **changes) -> "SmoothingConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def near_hard(cls, tau: float = 1e-4, **changes) -> "SmoothingConfig":
        """Every temperature set to ``tau`` (distance knobs scaled to match)."""
        temps = {f.name: tau for f in dataclasses.fields(cls)
                 if f.name.startswith("tau_") and f.name not in ("tau_normal", "tau_trace")}
        temps.update(lam=1e-6)
        temps.update(changes)
        return cls(**temps)

    @classmethod
    def no_smoothing(cls, **changes) -> "SmoothingConfig":
        """Unsmoothed baseline: hard QP operators, lam = 1e-6."""
        return cls(hard_qp=True, lam=1e-6, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]


DEFAULT = SmoothingConfig()

MODES = ("full", "no-ee", "one-sided")

