"""Locality-maximizing process-to-cpu assignments and taskset cpu-list text.

assign() hands each process a contiguous block of physical cores together
with every hyperthread sibling of those cores, so OpenMP threads of one
process never land on cores owned by another and never share a core across
processes.  The resulting cpu-sets render directly as `taskset --cpu-list`
arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ProcExceedsCoresError
from .topology import Topology


@dataclass(frozen=True)
class PinPlan:
    """Per-process disjoint cpu-sets for one topology, process index order."""

    topology: Topology
    assignments: tuple[tuple[int, ...], ...]


def assign(topo: Topology, nproc: int) -> PinPlan:
    """Bind nproc processes to contiguous, sibling-closed core blocks.

    Process k owns floor(total_cores / nproc) consecutive cores, the first
    total_cores mod nproc processes owning one extra, blocks ascending from
    core 0.  Each assignment holds all hyperthreads of its owned cores.
    """
    if nproc < 1:
        raise ValueError(f"nproc must be >= 1, got {nproc}")
    if nproc > topo.total_cores:
        raise ProcExceedsCoresError(
            f"nproc {nproc} exceeds {topo.total_cores} physical cores; "
            "hyperthread siblings are never split across processes")
    base, extra = divmod(topo.total_cores, nproc)
    assignments = []
    start = 0
    for k in range(nproc):
        count = base + (1 if k < extra else 0)
        cores = range(start, start + count)
        cpus = sorted(core + ht * topo.total_cores
                      for core in cores
                      for ht in range(topo.hyperthreads_per_core))
        assignments.append(tuple(cpus))
        start += count
    return PinPlan(topology=topo, assignments=tuple(assignments))


def format_cpulist(cpus: Sequence[int]) -> str:
    """Render cpu ids as taskset --cpu-list text: ascending, `a-b` runs, no spaces."""
    if not cpus:
        raise ValueError("cannot format an empty cpu set")
    ids = sorted(set(cpus))
    parts = []
    run_start = prev = ids[0]
    for cpu in ids[1:] + [None]:
        if cpu is not None and cpu == prev + 1:
            prev = cpu
            continue
        parts.append(str(run_start) if run_start == prev else f"{run_start}-{prev}")
        if cpu is not None:
            run_start = prev = cpu
    return ",".join(parts)


def parse_cpulist(text: str) -> tuple[int, ...]:
    """Inverse of format_cpulist, accepting any taskset --cpu-list string."""
    cpus: list[int] = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            cpus.extend(range(int(lo), int(hi) + 1))
        else:
            cpus.append(int(part))
    return tuple(sorted(set(cpus)))


def verify(plan: PinPlan) -> list[str]:
    """Check every plan invariant; returns one description per violation.

    Checked: cpu ids valid for the topology, assignments pairwise disjoint,
    sibling closure (a core's hyperthreads all inside one process or all
    unassigned), contiguous owned-core ranges, and owned-core counts
    balanced to within one.
    """
    topo = plan.topology
    violations: list[str] = []

    seen: dict[int, int] = {}
    for k, cpus in enumerate(plan.assignments):
        for cpu in cpus:
            if not 0 <= cpu < topo.total_cpus:
                violations.append(
                    f"invalid-cpu: process {k} holds cpu {cpu} outside [0, {topo.total_cpus})")
            elif cpu in seen:
                violations.append(
                    f"disjointness: cpu {cpu} assigned to both process {seen[cpu]} and process {k}")
            else:
                seen[cpu] = k

    owned_cores: list[set[int]] = []
    for k, cpus in enumerate(plan.assignments):
        cores = set()
        for cpu in cpus:
            if 0 <= cpu < topo.total_cpus:
                cores.add(cpu % topo.total_cores)
        holder_set = set(cpus)
        for core in sorted(cores):
            for ht in range(topo.hyperthreads_per_core):
                sib = core + ht * topo.total_cores
                if sib not in holder_set:
                    violations.append(
                        f"sibling-split: process {k} owns core {core} but not its sibling cpu {sib}")
        owned_cores.append(cores)

    for k, cores in enumerate(owned_cores):
        if cores and sorted(cores) != list(range(min(cores), max(cores) + 1)):
            violations.append(
                f"contiguity: process {k} owns non-contiguous cores {sorted(cores)}")

    counts = [len(c) for c in owned_cores]
    if counts and max(counts) - min(counts) > 1:
        lo = counts.index(min(counts))
        hi = counts.index(max(counts))
        violations.append(
            f"balance: process {hi} owns {max(counts)} cores while process {lo} owns {min(counts)}")

    return violations


def covered_cpus(plan: PinPlan) -> tuple[int, ...]:
    """Union of all assignments, ascending."""
    out: set[int] = set()
    for cpus in plan.assignments:
        out.update(cpus)
    return tuple(sorted(out))
