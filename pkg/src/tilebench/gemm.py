"""Built-in benchmark worker: seeded random matrices, a cache-blocked
multi-threaded multiply, and wall-clock Gflops accounting.

Determinism contract: matrix entries come from SplitMix64 (Steele et al.,
"Fast splittable pseudorandom number generators"), one 64-bit word per
element, the high 53 bits scaled into [0, 1).  The multiply accumulates every
output tile over k-blocks in a fixed order, so the result -- and therefore
the checksum -- is bitwise identical for any worker-thread count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Mapping

import numpy as np

from .sweep import DEFAULT_MODE, MemoryModeLabel, SweepPoint

DEFAULT_BLOCK = 64

_SM64_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class GemmTask:
    n: int
    nthread: int
    seed: int
    reps: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.nthread < 1:
            raise ValueError(f"nthread must be >= 1, got {self.nthread}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")


@dataclass(frozen=True)
class RunContext:
    """Orchestration metadata a worker stamps into its result row."""

    point: SweepPoint
    process_index: int = 0
    cpulist: str = ""
    mode: MemoryModeLabel = DEFAULT_MODE
    pinned: bool = False


@dataclass(frozen=True)
class BenchResult:
    """One measured run.  `seconds` is the best (minimum) timed rep;
    every rep's time is kept in `rep_seconds`."""

    point: SweepPoint
    process_index: int
    n: int
    seconds: float
    gflops: float
    checksum: float
    cpulist: str
    mode: MemoryModeLabel
    env: Mapping[str, str]
    timestamp: datetime
    pinned: bool = True
    rep_seconds: tuple[float, ...] = ()


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First `count` outputs of the SplitMix64 stream for `seed`, as uint64.

    Output k (0-based) mixes state seed + (k+1) * 0x9E3779B97F4A7C15, all
    arithmetic mod 2**64.
    """
    with np.errstate(over="ignore"):
        state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + np.arange(1, count + 1, dtype=np.uint64) * _SM64_GAMMA
        z = state
        z = (z ^ (z >> np.uint64(30))) * _SM64_MIX1
        z = (z ^ (z >> np.uint64(27))) * _SM64_MIX2
        return z ^ (z >> np.uint64(31))


def generate_matrix(n: int, seed: int) -> np.ndarray:
    """n x n float64 matrix of uniform [0, 1) values, fully determined by seed.

    Entry (i, j) uses SplitMix64 output i*n + j; the high 53 bits form the
    double, so the same (n, seed) is bitwise identical everywhere.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    try:
        words = splitmix64(seed, n * n)
        return ((words >> np.uint64(11)).astype(np.float64) * 2.0 ** -53).reshape(n, n)
    except MemoryError as exc:
        raise MemoryError(f"cannot allocate {8 * n * n} bytes for a {n}x{n} matrix") from exc


def _multiply_row_block(a: np.ndarray, b: np.ndarray, c: np.ndarray,
                        i0: int, block: int) -> None:
    """Fill output rows [i0, i0+block): j-tiles outer, k-tiles accumulated in order."""
    n = a.shape[0]
    i1 = min(i0 + block, n)
    for j0 in range(0, n, block):
        j1 = min(j0 + block, n)
        acc = np.zeros((i1 - i0, j1 - j0))
        for k0 in range(0, n, block):
            k1 = min(k0 + block, n)
            acc += a[i0:i1, k0:k1] @ b[k0:k1, j0:j1]
        c[i0:i1, j0:j1] = acc


def multiply(a: np.ndarray, b: np.ndarray, nthread: int,
             block: int = DEFAULT_BLOCK) -> np.ndarray:
    """Blocked C = A @ B over at most `nthread` concurrent row-block workers.

    Row blocks are disjoint output regions, so threads share nothing but the
    read-only inputs, and the per-element accumulation order never depends on
    the thread count.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"A must be square, got shape {a.shape}")
    if b.shape != a.shape:
        raise ValueError(f"dimension mismatch: A is {a.shape}, B is {b.shape}")
    if nthread < 1:
        raise ValueError(f"nthread must be >= 1, got {nthread}")
    n = a.shape[0]
    c = np.empty((n, n))
    with ThreadPoolExecutor(max_workers=nthread) as pool:
        # list() propagates any worker exception
        list(pool.map(lambda i0: _multiply_row_block(a, b, c, i0, block),
                      range(0, n, block)))
    return c


def gflops_of(n: int, seconds: float) -> float:
    """2*n^3 flops (one multiply + one add per inner step) over `seconds`, in Gflops."""
    if seconds <= 0:
        raise ValueError(f"seconds must be > 0, got {seconds}")
    return 2.0 * n ** 3 / seconds / 1e9


def run(task: GemmTask, context: RunContext | None = None) -> BenchResult:
    """Generate A (seed) and B (seed+1), multiply, and time the multiply only.

    With reps > 1 an untimed warm-up multiply runs first; the reported
    seconds is the minimum over the timed reps.
    """
    if context is None:
        context = RunContext(point=SweepPoint(nproc=1, nthread=task.nthread))
    a = generate_matrix(task.n, task.seed)
    b = generate_matrix(task.n, task.seed + 1)
    if task.reps > 1:
        multiply(a, b, task.nthread)
    rep_seconds = []
    c = None
    for _ in range(task.reps):
        start = time.perf_counter()
        c = multiply(a, b, task.nthread)
        rep_seconds.append(time.perf_counter() - start)
    best = min(rep_seconds)
    return BenchResult(
        point=context.point,
        process_index=context.process_index,
        n=task.n,
        seconds=best,
        gflops=gflops_of(task.n, best),
        checksum=float(c.sum()),
        cpulist=context.cpulist,
        mode=context.mode,
        env=_environment_snapshot(),
        timestamp=datetime.now(timezone.utc),
        pinned=context.pinned,
        rep_seconds=tuple(rep_seconds),
    )


def _environment_snapshot() -> dict[str, str]:
    keys = ["OMP_NUM_THREADS", "KMP_AFFINITY", "RESULT_FILE"]
    keys += sorted(k for k in os.environ if k.startswith("TILEBENCH_"))
    return {k: os.environ[k] for k in keys if k in os.environ}
