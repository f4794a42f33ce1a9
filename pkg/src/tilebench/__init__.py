"""tilebench: pinned matrix-multiply sweep benchmarking for tiled manycore CPUs."""

__version__ = "0.1.0"
