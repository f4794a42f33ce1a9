"""Builtin benchmark worker process.

Invoked as `python -m tilebench.worker --n N --nthread T --seed S --reps R`,
normally under `taskset --cpu-list` by the orchestrator.  The result row goes
to the file named by $RESULT_FILE (stdout if unset); orchestration context is
read from $TILEBENCH_NPROC, $TILEBENCH_PROC_INDEX, $TILEBENCH_CPULIST,
$TILEBENCH_MODE and $TILEBENCH_PINNED when present.

BLAS pools are capped at one thread before numpy loads: the kernel's own
row-block pool is the benchmarked parallelism, and it must stay bounded by
--nthread.
"""

from __future__ import annotations

import argparse
import os
import sys


def main(argv: list[str] | None = None) -> int:
    os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
    os.environ.setdefault("MKL_NUM_THREADS", "1")

    parser = argparse.ArgumentParser(prog="tilebench-worker",
                                     description="time one seeded matrix multiply")
    parser.add_argument("--n", type=int, required=True, help="matrix dimension")
    parser.add_argument("--nthread", type=int, required=True, help="worker thread cap")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--reps", type=int, default=1)
    args = parser.parse_args(argv)

    from . import gemm, report
    from .sweep import MemoryModeLabel, SweepPoint

    context = gemm.RunContext(
        point=SweepPoint(nproc=int(os.environ.get("TILEBENCH_NPROC", "1")),
                         nthread=args.nthread),
        process_index=int(os.environ.get("TILEBENCH_PROC_INDEX", "0")),
        cpulist=os.environ.get("TILEBENCH_CPULIST", ""),
        mode=MemoryModeLabel.parse(os.environ.get("TILEBENCH_MODE", "all2all-flat")),
        pinned=os.environ.get("TILEBENCH_PINNED", "false") == "true",
    )
    task = gemm.GemmTask(n=args.n, nthread=args.nthread, seed=args.seed, reps=args.reps)
    result = gemm.run(task, context)

    line = report.format_result_line(result)
    result_file = os.environ.get("RESULT_FILE")
    if result_file:
        with open(result_file, "w", encoding="utf-8") as fh:
            fh.write(line)
    else:
        sys.stdout.write(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
