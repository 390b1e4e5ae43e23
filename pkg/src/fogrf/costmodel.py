"""Parametric energy/latency cost model.

Converts counted operations (comparisons, queue traffic, inter-grove
transfers, probability accumulation) into joules, cycles, and
energy-delay product. All constants are user-overridable through a flat
``key = value`` config file; defaults target a 40 nm-class design at
1 GHz and are calibration knobs, not synthesis results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

__all__ = [
    "CostParams",
    "OpTrace",
    "energy_of",
    "edp",
    "pe_latency_cycles",
    "load_cost_params",
    "read_kv_file",
]


@dataclass(frozen=True)
class CostParams:
    """Per-operation energy (J) and latency (cycles) constants.

    ``t_mem_access`` doubles as the per-label accumulate cycle cost: the
    probability array lives in the data queue, so each accumulate is one
    queue-word access.
    """

    e_compare: float = 3e-12
    e_mem_byte_read: float = 1e-12
    e_mem_byte_write: float = 1.5e-12
    e_handshake_byte: float = 2e-12
    e_accumulate: float = 2e-12
    t_compare: int = 1
    t_mem_access: int = 1
    t_handshake: int = 2
    clock_hz: float = 1e9

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name.startswith("e_") and v < 0:
                raise ValueError(f"{f.name} must be >= 0, got {v}")
            if f.name.startswith("t_") and v < 1:
                raise ValueError(f"{f.name} must be >= 1, got {v}")
        if self.clock_hz <= 0:
            raise ValueError(f"clock_hz must be > 0, got {self.clock_hz}")


@dataclass
class OpTrace:
    """Operation counters accumulated while classifying one input."""

    comparisons: int = 0
    bytes_read: int = 0
    bytes_written: int = 0
    handshake_bytes: int = 0
    accumulate_ops: int = 0
    cycles: int = 0

    def merge(self, other: "OpTrace") -> None:
        self.comparisons += other.comparisons
        self.bytes_read += other.bytes_read
        self.bytes_written += other.bytes_written
        self.handshake_bytes += other.handshake_bytes
        self.accumulate_ops += other.accumulate_ops
        self.cycles += other.cycles


def energy_of(trace: OpTrace, p: CostParams) -> float:
    """Total energy in joules: counters dotted with per-op energies."""
    return (
        trace.comparisons * p.e_compare
        + trace.bytes_read * p.e_mem_byte_read
        + trace.bytes_written * p.e_mem_byte_write
        + trace.handshake_bytes * p.e_handshake_byte
        + trace.accumulate_ops * p.e_accumulate
    )


def edp(energy_j: float, latency_cycles: float, p: CostParams) -> float:
    """Energy-delay product in J*s."""
    return energy_j * (latency_cycles / p.clock_hz)


def pe_latency_cycles(
    n_trees: int,
    parallelism: int,
    depth_visited: int,
    n_labels: int,
    p: CostParams,
) -> int:
    """Cycles for one processing-element pass over an input.

    Trees run in serialized batches of size ``parallelism``; each batch
    costs the deepest path visited, then the probability array is
    updated one label at a time.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    batches = math.ceil(n_trees / parallelism)
    return batches * depth_visited * p.t_compare + n_labels * p.t_mem_access


def read_kv_file(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


_INT_KEYS = {"t_compare", "t_mem_access", "t_handshake"}


def load_cost_params(path) -> CostParams:
    """Load cost constants; missing keys keep defaults, unknown keys error."""
    known = {f.name for f in fields(CostParams)}
    overrides = {}
    for key, value in read_kv_file(path).items():
        if key not in known:
            raise ValueError(f"unknown cost parameter {key!r} in {path}")
        try:
            overrides[key] = int(value) if key in _INT_KEYS else float(value)
        except ValueError as exc:
            raise ValueError(f"bad value for {key!r} in {path}: {value!r}") from exc
    return replace(CostParams(), **overrides)
