"""Turn a sweep plan into pinned worker processes and collect their results.

Each sweep point launches its processes concurrently under
`taskset --cpu-list`, with OMP_NUM_THREADS and KMP_AFFINITY=granularity=fine
exported (overridable), and waits for the whole group before moving on.
Workers deliver one CSV result line through the file named by RESULT_FILE,
which survives crashes and works for any worker language.
"""

from __future__ import annotations

import json
import logging
import os
import platform
import re
import shlex
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Sequence

from . import pinning, report
from .errors import CommandTemplateError, PinningUnsupportedError, ProcExceedsCoresError
from .gemm import BenchResult
from .sweep import SweepPlan, SweepPoint, matrix_size
from .topology import Topology

log = logging.getLogger(__name__)

DEFAULT_ENV = {"KMP_AFFINITY": "granularity=fine"}
TEMPLATE_PLACEHOLDERS = ("N", "NTHREAD", "SEED", "RESULT_FILE")

# Context exported so any worker can stamp the full result-row schema.
_CONTEXT_KEYS = ("TILEBENCH_NPROC", "TILEBENCH_PROC_INDEX", "TILEBENCH_CPULIST",
                 "TILEBENCH_MODE", "TILEBENCH_PINNED")


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to materialize or execute one sweep on one node."""

    plan: SweepPlan
    topology: Topology
    worker: str | None = None  # command template; None runs the builtin worker
    env_overrides: Mapping[str, str] = field(default_factory=dict)
    output_dir: Path = Path("tilebench-results")
    dry_run: bool = False
    no_pin: bool = False
    cooldown_s: float = 1.0


@dataclass(frozen=True)
class LaunchRecord:
    point: SweepPoint
    process_index: int
    cpulist: str
    env: Mapping[str, str]
    command_line: str
    result_file: Path
    n: int


@dataclass(frozen=True)
class WorkerFailure:
    point: SweepPoint
    process_index: int
    kind: str  # nonzero-exit | missing-result | parse-error
    detail: str
    exit_code: int | None = None


@dataclass(frozen=True)
class ExecutionOutcome:
    results: tuple[BenchResult, ...]
    failures: tuple[WorkerFailure, ...]
    manifest_path: Path | None = None

    @property
    def ok(self) -> bool:
        return not self.failures


def materialize(spec: RunSpec) -> list[LaunchRecord]:
    """Expand the plan into one launch record per (point, process).

    Pure: identical specs yield identical records.  The command line is
    `taskset --cpu-list <cpus> env KEY=VAL ... <worker>` (taskset dropped
    when no_pin), with overrides winning over the default environment.
    """
    records: list[LaunchRecord] = []
    for point in spec.plan.points:
        if point.nproc > spec.topology.total_cores:
            raise ProcExceedsCoresError(
                f"point {point} needs {point.nproc} processes but the topology "
                f"has {spec.topology.total_cores} cores")
        plan = pinning.assign(spec.topology, point.nproc)
        n = matrix_size(spec.plan.base_n, point.nproc)
        point_dir = Path(spec.output_dir) / f"p{point.nproc}x{point.nthread}"
        for k, cpus in enumerate(plan.assignments):
            cpulist = pinning.format_cpulist(cpus)
            result_file = point_dir / f"proc{k}.csv"
            env = {
                "OMP_NUM_THREADS": str(point.nthread),
                **DEFAULT_ENV,
                "RESULT_FILE": str(result_file),
                "TILEBENCH_NPROC": str(point.nproc),
                "TILEBENCH_PROC_INDEX": str(k),
                "TILEBENCH_CPULIST": cpulist,
                "TILEBENCH_MODE": spec.plan.mode.label,
                "TILEBENCH_PINNED": "false" if spec.no_pin else "true",
            }
            env.update(spec.env_overrides)
            worker_argv = _worker_argv(spec, n, point.nthread, spec.plan.seed + k,
                                       result_file)
            argv = [] if spec.no_pin else ["taskset", "--cpu-list", cpulist]
            argv += ["env"] + [f"{key}={env[key]}" for key in _env_order(env)]
            argv += worker_argv
            records.append(LaunchRecord(
                point=point,
                process_index=k,
                cpulist=cpulist,
                env=env,
                command_line=shlex.join(argv),
                result_file=result_file,
                n=n,
            ))
    return records


def _env_order(env: Mapping[str, str]) -> list[str]:
    head = [k for k in ("OMP_NUM_THREADS", "KMP_AFFINITY") if k in env]
    return head + sorted(k for k in env if k not in head)


def _worker_argv(spec: RunSpec, n: int, nthread: int, seed: int,
                 result_file: Path) -> list[str]:
    if spec.worker is None:
        return [sys.executable, "-m", "tilebench.worker",
                "--n", str(n), "--nthread", str(nthread),
                "--seed", str(seed), "--reps", str(spec.plan.reps)]
    values = {"N": str(n), "NTHREAD": str(nthread), "SEED": str(seed),
              "RESULT_FILE": str(result_file)}
    unknown = [m for m in re.findall(r"\{([A-Za-z_]+)\}", spec.worker)
               if m not in values]
    if unknown:
        raise CommandTemplateError(
            f"unknown placeholder {{{unknown[0]}}} in worker template; "
            f"supported: {', '.join('{%s}' % p for p in TEMPLATE_PLACEHOLDERS)}")
    rendered = re.sub(r"\{([A-Za-z_]+)\}", lambda m: values[m.group(1)], spec.worker)
    return shlex.split(rendered)


def dry_run(spec: RunSpec) -> str:
    """The exact launch commands, grouped per point, executing nothing."""
    records = materialize(spec)
    lines: list[str] = []
    current: SweepPoint | None = None
    for rec in records:
        if rec.point != current:
            current = rec.point
            lines.append(f"# point {rec.point.nproc}×{rec.point.nthread}  N={rec.n}")
        lines.append(rec.command_line)
    return "\n".join(lines) + "\n"


def check_host_can_pin(topo: Topology) -> None:
    """Raise unless this host can honor cpu-lists for `topo`."""
    if shutil.which("taskset") is None:
        raise PinningUnsupportedError(
            "taskset not found on PATH; rerun with no_pin to skip cpu binding")
    host_cpus = os.cpu_count() or 1
    if host_cpus < topo.total_cpus:
        raise PinningUnsupportedError(
            f"host exposes {host_cpus} cpus but the topology needs "
            f"{topo.total_cpus}; rerun with no_pin to skip cpu binding")


def execute(spec: RunSpec,
            on_point_done: Callable[[int, int], None] | None = None) -> ExecutionOutcome:
    """Run the sweep: one point at a time, that point's workers concurrently.

    Worker stdout/stderr land in per-process .log files next to the result
    files.  A worker failing or producing an unreadable result file becomes a
    WorkerFailure; remaining points still run.
    """
    if spec.dry_run:
        raise ValueError("execute() called on a dry_run spec; use dry_run() instead")
    if not spec.no_pin:
        check_host_can_pin(spec.topology)
    out_dir = Path(spec.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = materialize(spec)
    by_point: dict[SweepPoint, list[LaunchRecord]] = {}
    for rec in records:
        by_point.setdefault(rec.point, []).append(rec)

    started_at = datetime.now(timezone.utc)
    results: list[BenchResult] = []
    failures: list[WorkerFailure] = []
    for i, (point, group) in enumerate(by_point.items()):
        if i > 0 and spec.cooldown_s > 0:
            time.sleep(spec.cooldown_s)
        log.info("point %s: launching %d workers (N=%d)", point, len(group), group[0].n)
        procs = []
        for rec in group:
            rec.result_file.parent.mkdir(parents=True, exist_ok=True)
            rec.result_file.unlink(missing_ok=True)
            log_path = rec.result_file.with_suffix(".log")
            with open(log_path, "wb") as log_file:
                procs.append(subprocess.Popen(
                    shlex.split(rec.command_line),
                    stdout=log_file, stderr=subprocess.STDOUT))
        for rec, proc in zip(group, procs):
            code = proc.wait()
            if code != 0:
                failures.append(WorkerFailure(
                    point=point, process_index=rec.process_index,
                    kind="nonzero-exit", exit_code=code,
                    detail=_log_tail(rec.result_file.with_suffix(".log"))))
                continue
            outcome = _collect_result(rec)
            if isinstance(outcome, WorkerFailure):
                failures.append(outcome)
            else:
                results.append(outcome)
        if on_point_done is not None:
            on_point_done(i + 1, len(by_point))

    manifest_path = _write_manifest(spec, started_at, len(results), len(failures))
    return ExecutionOutcome(results=tuple(results), failures=tuple(failures),
                            manifest_path=manifest_path)


def _collect_result(rec: LaunchRecord) -> BenchResult | WorkerFailure:
    try:
        line = rec.result_file.read_text(encoding="utf-8")
    except OSError as exc:
        return WorkerFailure(point=rec.point, process_index=rec.process_index,
                             kind="missing-result", detail=str(exc))
    try:
        result = report.parse_result_line(line)
    except (ValueError, IndexError) as exc:
        return WorkerFailure(point=rec.point, process_index=rec.process_index,
                             kind="parse-error", detail=str(exc))
    if result.point != rec.point or result.process_index != rec.process_index:
        return WorkerFailure(
            point=rec.point, process_index=rec.process_index, kind="parse-error",
            detail=f"result file claims point {result.point} proc "
                   f"{result.process_index}, expected {rec.point} proc {rec.process_index}")
    return result


def _log_tail(path: Path, limit: int = 2000) -> str:
    try:
        text = path.read_text(encoding="utf-8", errors="replace")
    except OSError:
        return "(no diagnostic output captured)"
    return text[-limit:].strip() or "(no diagnostic output captured)"


def _write_manifest(spec: RunSpec, started_at: datetime,
                    n_results: int, n_failures: int) -> Path:
    from .sweep import format_plan

    manifest = {
        "plan": format_plan(spec.plan),
        "topology": {
            "num_tiles": spec.topology.num_tiles,
            "cores_per_tile": spec.topology.cores_per_tile,
            "hyperthreads_per_core": spec.topology.hyperthreads_per_core,
        },
        "worker": spec.worker or "builtin-gemm",
        "env_overrides": dict(spec.env_overrides),
        "no_pin": spec.no_pin,
        "cooldown_s": spec.cooldown_s,
        "host": {"node": platform.node(), "cpus": os.cpu_count()},
        "started_at": started_at.isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "results": n_results,
        "failures": n_failures,
    }
    path = Path(spec.output_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path
