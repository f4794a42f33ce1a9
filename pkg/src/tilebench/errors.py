"""Exception types shared across tilebench modules."""


class MachineFileError(ValueError):
    """A machine description file is missing keys, has unknown keys, or bad values."""


class UnsupportedGridError(ValueError):
    """standard_grid() was asked for a core count it cannot cover."""


class ProcExceedsCoresError(ValueError):
    """More processes requested than physical cores; hyperthread siblings are never split."""


class CommandTemplateError(ValueError):
    """A worker command template contains an unknown placeholder."""


class PinningUnsupportedError(RuntimeError):
    """The host cannot honor the requested cpu pinning (too few cpus or no taskset)."""
