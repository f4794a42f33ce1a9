"""Tiled manycore CPU model and the OS logical-cpu numbering.

A node is described by three counts: tiles, cores per tile, and hyperthreads
per core.  Linux numbers the hyperthread contexts core-major: logical cpu
``core + ht * total_cores``, so on a 64-core part the four contexts of core p
are cpus p, p+64, p+128, p+192, and cores 2t and 2t+1 sit on tile t.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Topology:
    """Immutable description of one node; safe to share across threads."""

    num_tiles: int
    cores_per_tile: int
    hyperthreads_per_core: int

    def __post_init__(self) -> None:
        for name in ("num_tiles", "cores_per_tile", "hyperthreads_per_core"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value!r}")

    @property
    def total_cores(self) -> int:
        return self.num_tiles * self.cores_per_tile

    @property
    def total_cpus(self) -> int:
        return self.total_cores * self.hyperthreads_per_core

    def logical_cpu_id(self, core: int, ht: int) -> int:
        """Logical cpu number of hyperthread `ht` on physical core `core`."""
        if not 0 <= core < self.total_cores:
            raise ValueError(f"core {core} out of range [0, {self.total_cores})")
        if not 0 <= ht < self.hyperthreads_per_core:
            raise ValueError(f"ht {ht} out of range [0, {self.hyperthreads_per_core})")
        return core + ht * self.total_cores

    def decompose(self, cpu: int) -> tuple[int, int]:
        """Inverse of logical_cpu_id: cpu -> (core, ht)."""
        self._check_cpu(cpu)
        return cpu % self.total_cores, cpu // self.total_cores

    def tile_of(self, core: int) -> int:
        """Tile index housing a physical core."""
        if not 0 <= core < self.total_cores:
            raise ValueError(f"core {core} out of range [0, {self.total_cores})")
        return core // self.cores_per_tile

    def sibling_cpus(self, cpu: int) -> tuple[int, ...]:
        """All logical cpus (including `cpu`) sharing its physical core, ascending."""
        self._check_cpu(cpu)
        core = cpu % self.total_cores
        return tuple(core + ht * self.total_cores
                     for ht in range(self.hyperthreads_per_core))

    def _check_cpu(self, cpu: int) -> None:
        if not 0 <= cpu < self.total_cpus:
            raise ValueError(f"cpu {cpu} out of range [0, {self.total_cpus})")
