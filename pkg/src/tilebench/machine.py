"""Machine description files: topology, peak model, and default mode label.

Format is one key=value per line with `#` comments:

    num_tiles=32
    cores_per_tile=2
    hyperthreads_per_core=4
    vector_units=128
    flops_per_unit_per_cycle=16
    clock_ghz=1.1
    mode_label=all2all-flat

Machines are explicit configuration, never auto-detected, so plans stay
reproducible across hosts.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import MachineFileError
from .report import PeakModel
from .sweep import DEFAULT_MODE, MemoryModeLabel
from .topology import Topology

_INT_KEYS = ("num_tiles", "cores_per_tile", "hyperthreads_per_core",
             "vector_units", "flops_per_unit_per_cycle")
_REQUIRED_KEYS = _INT_KEYS + ("clock_ghz",)
_ALL_KEYS = _REQUIRED_KEYS + ("mode_label",)

DEFAULT_MACHINE_NAME = "xeon-phi-7210"


@dataclass(frozen=True)
class Machine:
    topology: Topology
    peak: PeakModel
    mode: MemoryModeLabel


def parse_machine_text(text: str, source: str = "<machine>") -> Machine:
    values: dict[str, str] = {}
    unknown: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MachineFileError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _ALL_KEYS:
            unknown.append(key)
            continue
        values[key] = value
    if unknown:
        raise MachineFileError(f"{source}: unknown keys: {', '.join(sorted(set(unknown)))}")
    missing = [k for k in _REQUIRED_KEYS if k not in values]
    if missing:
        raise MachineFileError(f"{source}: missing keys: {', '.join(missing)}")
    try:
        ints = {k: int(values[k]) for k in _INT_KEYS}
        clock = float(values["clock_ghz"])
    except ValueError as exc:
        raise MachineFileError(f"{source}: {exc}") from exc
    try:
        topo = Topology(num_tiles=ints["num_tiles"],
                        cores_per_tile=ints["cores_per_tile"],
                        hyperthreads_per_core=ints["hyperthreads_per_core"])
        peak = PeakModel(vector_units=ints["vector_units"],
                         flops_per_unit_per_cycle=ints["flops_per_unit_per_cycle"],
                         clock_ghz=clock)
        mode = (MemoryModeLabel.parse(values["mode_label"])
                if "mode_label" in values else DEFAULT_MODE)
    except ValueError as exc:
        raise MachineFileError(f"{source}: {exc}") from exc
    return Machine(topology=topo, peak=peak, mode=mode)


def load_machine(path: str | Path) -> Machine:
    path = Path(path)
    return parse_machine_text(path.read_text(encoding="utf-8"), source=str(path))


def builtin_machine_text(name: str = DEFAULT_MACHINE_NAME) -> str:
    ref = resources.files("tilebench").joinpath(f"machines/{name}.machine")
    if not ref.is_file():
        raise MachineFileError(f"no builtin machine named {name!r}")
    return ref.read_text(encoding="utf-8")


def default_machine() -> Machine:
    return parse_machine_text(builtin_machine_text(), source=DEFAULT_MACHINE_NAME)
