"""Peak modeling, per-point aggregation, memory-mode comparison, and the
results CSV schema.

The node-level number for a point is the sum of its processes' Gflops (the
delivered rate of the whole node); per-process rows stay in the CSV so any
other aggregation can be recomputed.  Relative performance is reported both
against the practical compute peak and against a baseline memory mode.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from statistics import mean
from typing import Iterable, Mapping, Sequence

from .gemm import BenchResult
from .sweep import MemoryModeLabel, SweepPoint

RESULTS_COLUMNS = (
    "mode", "cluster", "mcdram", "nproc", "nthread", "proc_index",
    "n", "seconds", "gflops", "checksum", "cpulist", "pinned", "timestamp",
)


@dataclass(frozen=True)
class PeakModel:
    """Practical compute ceiling: vector units x flops/unit/cycle x clock."""

    vector_units: int
    flops_per_unit_per_cycle: int
    clock_ghz: float

    def __post_init__(self) -> None:
        for name in ("vector_units", "flops_per_unit_per_cycle", "clock_ghz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


def practical_peak(pm: PeakModel) -> float:
    """Peak Gflops of the node; e.g. 128 units x 16 flop x 1.1 GHz = 2252.8."""
    return pm.vector_units * pm.flops_per_unit_per_cycle * pm.clock_ghz


def aggregate_point(results: Sequence[BenchResult]) -> float:
    """Node-level Gflops for one point: sum over its processes."""
    if not results:
        raise ValueError("aggregate_point needs at least one result")
    points = {r.point for r in results}
    if len(points) > 1:
        raise ValueError(f"results mix sweep points: {sorted(map(str, points))}")
    return sum(r.gflops for r in results)


def relative_performance(measured: float, peak: float) -> float:
    if peak <= 0:
        raise ValueError(f"peak must be > 0, got {peak}")
    if measured < 0:
        raise ValueError(f"measured must be >= 0, got {measured}")
    return measured / peak


@dataclass(frozen=True)
class ModeComparison:
    """Per-mode, per-point aggregate Gflops plus the baseline mode to divide by."""

    per_mode: Mapping[MemoryModeLabel, Mapping[SweepPoint, float]]
    baseline: MemoryModeLabel

    def __post_init__(self) -> None:
        if self.baseline not in self.per_mode:
            raise ValueError(f"baseline mode {self.baseline} absent from comparison")


@dataclass(frozen=True)
class ModeTableRow:
    point: SweepPoint
    mode: MemoryModeLabel
    gflops: float
    vs_baseline: float
    vs_peak: float


@dataclass(frozen=True)
class ModeTable:
    rows: tuple[ModeTableRow, ...]
    ranking: tuple[MemoryModeLabel, ...]  # descending mean Gflops over points

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["nproc", "nthread", "mode", "gflops", "vs_baseline", "vs_peak"])
        for row in self.rows:
            writer.writerow([row.point.nproc, row.point.nthread, row.mode.label,
                             repr(row.gflops), repr(row.vs_baseline), repr(row.vs_peak)])
        return buf.getvalue()

    def to_text(self) -> str:
        header = ("point", "mode", "gflops", "vs_baseline", "vs_peak")
        cells = [header]
        for row in self.rows:
            cells.append((str(row.point), row.mode.label, f"{row.gflops:.2f}",
                          f"{row.vs_baseline:.3f}", f"{row.vs_peak:.3f}"))
        widths = [max(len(line[col]) for line in cells) for col in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip()
                 for line in cells]
        ranked = ", ".join(m.label for m in self.ranking)
        return "\n".join(lines) + f"\nmodes by mean gflops: {ranked}\n"


def compare_modes(comparison: ModeComparison, peak_gflops: float) -> ModeTable:
    """Tabulate every (point, mode) against the baseline mode and the peak.

    All modes must cover the same point set.  Modes are ranked by mean
    Gflops over the points, best first (ties broken by label).
    """
    if peak_gflops <= 0:
        raise ValueError(f"peak_gflops must be > 0, got {peak_gflops}")
    point_sets = {mode: frozenset(vals) for mode, vals in comparison.per_mode.items()}
    reference = point_sets[comparison.baseline]
    for mode, pts in sorted(point_sets.items(), key=lambda kv: kv[0].label):
        if pts != reference:
            missing = sorted(map(str, reference ^ pts))
            raise ValueError(
                f"mode {mode.label} does not cover the same points as "
                f"{comparison.baseline.label}; mismatched: {', '.join(missing)}")

    means = {mode: mean(vals.values()) for mode, vals in comparison.per_mode.items()}
    ranking = tuple(sorted(means, key=lambda m: (-means[m], m.label)))

    points = sorted(reference, key=lambda p: (p.nproc, p.nthread))
    baseline_vals = comparison.per_mode[comparison.baseline]
    rows = []
    for point in points:
        for mode in ranking:
            gf = comparison.per_mode[mode][point]
            base = baseline_vals[point]
            rows.append(ModeTableRow(
                point=point,
                mode=mode,
                gflops=gf,
                vs_baseline=gf / base if base > 0 else float("inf"),
                vs_peak=relative_performance(gf, peak_gflops),
            ))
    return ModeTable(rows=tuple(rows), ranking=ranking)


def summarize_points(results: Iterable[BenchResult]) -> dict[SweepPoint, float]:
    """Group results by point and aggregate each group."""
    grouped: dict[SweepPoint, list[BenchResult]] = {}
    for r in results:
        grouped.setdefault(r.point, []).append(r)
    return {point: aggregate_point(rs) for point, rs in sorted(
        grouped.items(), key=lambda kv: (kv[0].nproc, kv[0].nthread))}


def result_to_row(r: BenchResult) -> list[str]:
    return [
        r.mode.label, r.mode.cluster, r.mode.mcdram,
        str(r.point.nproc), str(r.point.nthread), str(r.process_index),
        str(r.n), repr(r.seconds), repr(r.gflops), repr(r.checksum),
        r.cpulist, "true" if r.pinned else "false", r.timestamp.isoformat(),
    ]


def result_from_row(row: Sequence[str]) -> BenchResult:
    if len(row) != len(RESULTS_COLUMNS):
        raise ValueError(f"expected {len(RESULTS_COLUMNS)} fields, got {len(row)}: {row!r}")
    mode = MemoryModeLabel(cluster=row[1], mcdram=row[2])
    if mode.label != row[0]:
        raise ValueError(f"mode column {row[0]!r} disagrees with cluster/mcdram {mode.label!r}")
    return BenchResult(
        point=SweepPoint(nproc=int(row[3]), nthread=int(row[4])),
        process_index=int(row[5]),
        n=int(row[6]),
        seconds=float(row[7]),
        gflops=float(row[8]),
        checksum=float(row[9]),
        cpulist=row[10],
        mode=mode,
        env={},
        timestamp=datetime.fromisoformat(row[12]),
        pinned=row[11] == "true",
    )


def format_result_line(r: BenchResult) -> str:
    """The single CSV line a worker writes to its RESULT_FILE (no header)."""
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(result_to_row(r))
    return buf.getvalue()


def parse_result_line(line: str) -> BenchResult:
    rows = list(csv.reader(io.StringIO(line)))
    if len(rows) != 1:
        raise ValueError(f"expected exactly one CSV record, got {len(rows)}")
    return result_from_row(rows[0])


def format_csv(results: Iterable[BenchResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_COLUMNS)
    for r in results:
        writer.writerow(result_to_row(r))
    return buf.getvalue()


def emit_csv(results: Iterable[BenchResult], path: str | Path) -> Path:
    """Write the results CSV (header + one row per result) to `path`."""
    path = Path(path)
    try:
        path.write_text(format_csv(results), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write results CSV to {path}: {exc}") from exc
    return path


def parse_csv_text(text: str) -> list[BenchResult]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("results CSV is empty")
    if tuple(rows[0]) != RESULTS_COLUMNS:
        raise ValueError(f"unexpected CSV header: {rows[0]!r}")
    return [result_from_row(row) for row in rows[1:] if row]


def load_csv(path: str | Path) -> list[BenchResult]:
    return parse_csv_text(Path(path).read_text(encoding="utf-8"))
