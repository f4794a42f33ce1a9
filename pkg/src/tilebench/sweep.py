"""Benchmark sweep planning: process x thread grids, constant-memory sizing,
memory-mode labels, and the plan file format.

The matrix dimension for a point shrinks as floor(base_n / sqrt(nproc)) so the
combined footprint of the three benchmark matrices, 3 * 8 * n^2 bytes per
process, stays constant across the whole grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import UnsupportedGridError

CLUSTER_MODES = ("all2all", "hemisphere", "quadrant", "snc-2", "snc-4")
MCDRAM_MODES = ("flat", "cache", "hybrid")


@dataclass(frozen=True)
class SweepPoint:
    """One grid entry: nproc worker processes, nthread OpenMP threads each."""

    nproc: int
    nthread: int

    def __post_init__(self) -> None:
        if self.nproc < 1 or self.nthread < 1:
            raise ValueError(f"nproc and nthread must be >= 1, got {self.nproc}x{self.nthread}")

    def __str__(self) -> str:
        return f"{self.nproc}x{self.nthread}"


@dataclass(frozen=True)
class MemoryModeLabel:
    """Boot-time NUMA-cluster + MCDRAM mode pair, recorded as run metadata.

    There are 15 valid combinations: {all2all, hemisphere, quadrant, snc-2,
    snc-4} x {flat, cache, hybrid}.  The label is an operator-supplied tag;
    nothing here touches actual hardware state.
    """

    cluster: str
    mcdram: str

    def __post_init__(self) -> None:
        if self.cluster not in CLUSTER_MODES:
            raise ValueError(f"unknown cluster mode {self.cluster!r}; expected one of {CLUSTER_MODES}")
        if self.mcdram not in MCDRAM_MODES:
            raise ValueError(f"unknown mcdram mode {self.mcdram!r}; expected one of {MCDRAM_MODES}")

    @property
    def label(self) -> str:
        return f"{self.cluster}-{self.mcdram}"

    @classmethod
    def parse(cls, text: str) -> "MemoryModeLabel":
        """Parse 'cluster-mcdram' text such as 'all2all-cache' or 'snc-2-flat'."""
        cluster, sep, mcdram = text.strip().rpartition("-")
        if not sep or not cluster:
            raise ValueError(f"mode label {text!r} is not of the form <cluster>-<mcdram>")
        return cls(cluster=cluster, mcdram=mcdram)

    def __str__(self) -> str:
        return self.label


DEFAULT_MODE = MemoryModeLabel("all2all", "flat")


@dataclass(frozen=True)
class SweepPlan:
    points: tuple[SweepPoint, ...]
    base_n: int
    mode: MemoryModeLabel = DEFAULT_MODE
    reps: int = 1
    seed: int = 1

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("a sweep plan needs at least one point")
        if self.base_n < 1:
            raise ValueError(f"base_n must be >= 1, got {self.base_n}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")


def standard_grid(total_cores: int) -> list[SweepPoint]:
    """Power-of-two ladder covering all cores: (p, total_cores/p) for p = 1,2,4,...

    For 64 cores this is 1x64, 2x32, 4x16, 8x8, 16x4, 32x2, 64x1.
    """
    if total_cores < 1 or total_cores & (total_cores - 1):
        raise UnsupportedGridError(
            f"standard grid needs a power-of-two core count, got {total_cores}; "
            "use full_grid() for arbitrary process/thread lists")
    points = []
    p = 1
    while p <= total_cores:
        points.append(SweepPoint(nproc=p, nthread=total_cores // p))
        p *= 2
    return points


def full_grid(procs: Sequence[int], threads: Sequence[int]) -> list[SweepPoint]:
    """Cartesian product of explicit process and thread counts, procs outer."""
    if not procs or not threads:
        raise ValueError("procs and threads must both be non-empty")
    return [SweepPoint(nproc=p, nthread=t) for p in procs for t in threads]


def matrix_size(base_n: int, nproc: int) -> int:
    """Per-process matrix dimension floor(base_n / sqrt(nproc)), at least 1."""
    if base_n < 1:
        raise ValueError(f"base_n must be >= 1, got {base_n}")
    if nproc < 1:
        raise ValueError(f"nproc must be >= 1, got {nproc}")
    return max(1, math.floor(base_n / math.sqrt(nproc)))


def footprint_bytes(n: int, nproc: int) -> int:
    """Total bytes of the three n x n float64 matrices across nproc processes."""
    if n < 1 or nproc < 1:
        raise ValueError(f"n and nproc must be >= 1, got n={n} nproc={nproc}")
    return 3 * 8 * n * n * nproc


# Plan file: key=value header then one `nproc,nthread` line per point.
# `#` starts a comment; blank lines are ignored.  Serialization is canonical
# so an archived plan replays bit-identically.

_PLAN_KEYS = ("base_n", "reps", "seed", "mode_cluster", "mode_mcdram")


def format_plan(plan: SweepPlan) -> str:
    lines = [
        f"base_n={plan.base_n}",
        f"reps={plan.reps}",
        f"seed={plan.seed}",
        f"mode_cluster={plan.mode.cluster}",
        f"mode_mcdram={plan.mode.mcdram}",
    ]
    lines.extend(f"{pt.nproc},{pt.nthread}" for pt in plan.points)
    return "\n".join(lines) + "\n"


def parse_plan(text: str) -> SweepPlan:
    header: dict[str, str] = {}
    points: list[SweepPoint] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _PLAN_KEYS:
                raise ValueError(f"plan line {lineno}: unknown key {key!r}")
            header[key] = value
        elif "," in line:
            p, t = (part.strip() for part in line.split(",", 1))
            points.append(SweepPoint(nproc=int(p), nthread=int(t)))
        else:
            raise ValueError(f"plan line {lineno}: expected key=value or nproc,nthread, got {raw!r}")
    missing = [k for k in _PLAN_KEYS if k not in header]
    if missing:
        raise ValueError(f"plan is missing keys: {', '.join(missing)}")
    return SweepPlan(
        points=tuple(points),
        base_n=int(header["base_n"]),
        mode=MemoryModeLabel(cluster=header["mode_cluster"], mcdram=header["mode_mcdram"]),
        reps=int(header["reps"]),
        seed=int(header["seed"]),
    )
