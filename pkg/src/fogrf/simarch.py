"""Deterministic cycle-stepped simulator of the grove ring.

Each grove owns a byte-addressed ring-buffer data queue (front/back
pointers stepping by the entry width), a processing element that runs
the grove's trees, and a req/ack handshake toward the next grove in the
ring. Low-confidence entries forward one hop with their running
probability sum; forwarded entries enter at the *front* of the
neighbor's queue so partially computed work has priority. Everything is
single-threaded and seed-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .costmodel import CostParams, OpTrace, edp, energy_of, pe_latency_cycles
from .fog import argmax_lowest, max_diff, start_grove_for

__all__ = [
    "gamma",
    "QueueEntry",
    "DataQueue",
    "QueueFullError",
    "GroveUnit",
    "SimConfig",
    "SimRecord",
    "SimStats",
    "simulate",
    "verify_event_log",
]


def gamma(n_features: int, n_labels: int) -> int:
    """Queue entry width in bytes: hops + features + id + one byte per label."""
    if n_features < 1 or n_labels < 1:
        raise ValueError("n_features and n_labels must be >= 1")
    return 1 + n_features + 1 + n_labels


class QueueFullError(RuntimeError):
    pass


@dataclass
class QueueEntry:
    input_id: int
    payload: np.ndarray  # feature vector
    prob: np.ndarray  # running probability sum
    hops: int = 0  # completed grove visits
    arrival: int = 0  # cycle the processor issued this input
    start_grove: int = 0
    trace: OpTrace = dataclass_field(default_factory=OpTrace)
    # transient PE results
    confident: bool = False
    label: int = -1
    confidence: float = 0.0
    prob_norm: np.ndarray | None = None


class DataQueue:
    """Byte-addressed ring buffer of fixed-width entries.

    ``fr`` points at the entry being processed, ``bk`` at the first
    empty back slot; both advance modulo capacity in steps of the entry
    width. Capacity is rounded up to a whole number of entries so the
    pointers stay aligned across wrap-around.
    """

    def __init__(self, capacity_bytes: int, entry_bytes: int):
        if capacity_bytes < entry_bytes:
            raise ValueError("queue capacity must hold at least one entry")
        remainder = capacity_bytes % entry_bytes
        self.capacity_bytes = capacity_bytes + (entry_bytes - remainder if remainder else 0)
        self.gamma = entry_bytes
        self.fr = 0
        self.bk = 0
        self._slots: dict[int, QueueEntry] = {}

    def __len__(self) -> int:
        return len(self._slots)

    @property
    def free_bytes(self) -> int:
        return self.capacity_bytes - len(self._slots) * self.gamma

    def push_back(self, entry: QueueEntry) -> None:
        if self.free_bytes < self.gamma:
            raise QueueFullError("no free slot at back of queue")
        assert self.bk % self.gamma == 0 and self.bk not in self._slots
        self._slots[self.bk] = entry
        self.bk = (self.bk + self.gamma) % self.capacity_bytes

    def push_front(self, entry: QueueEntry) -> None:
        if self.free_bytes < self.gamma:
            raise QueueFullError("no free slot at front of queue")
        self.fr = (self.fr - self.gamma) % self.capacity_bytes
        assert self.fr not in self._slots
        self._slots[self.fr] = entry

    def front(self) -> QueueEntry:
        return self._slots[self.fr]

    def pop_front(self) -> QueueEntry:
        entry = self._slots.pop(self.fr)
        self.fr = (self.fr + self.gamma) % self.capacity_bytes
        return entry


@dataclass(frozen=True)
class SimConfig:
    n_groves: int
    trees_per_grove: int
    thresh: float = 0.5
    max_hops: int | None = None  # None -> n_groves
    seed: int = 0
    queue_capacity_bytes: int = 6144
    parallelism: int = 1
    arrival: str = "batch_at_zero"  # or "fixed_interval"
    arrival_interval: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.thresh < 1.0:
            raise ValueError(f"thresh must lie in (0, 1), got {self.thresh}")
        hops = self.max_hops if self.max_hops is not None else self.n_groves
        if not 1 <= hops <= self.n_groves:
            raise ValueError(f"max_hops must lie in [1, {self.n_groves}]")
        if self.arrival not in ("batch_at_zero", "fixed_interval"):
            raise ValueError(f"unknown arrival model {self.arrival!r}")
        if self.parallelism < 1 or self.arrival_interval < 1:
            raise ValueError("parallelism and arrival_interval must be >= 1")


class GroveUnit:
    """One grove: data queue + processing element + outgoing handshake."""

    def __init__(self, grove, index: int, queue: DataQueue):
        self.grove = grove
        self.index = index
        self.queue = queue
        self.reserved_bytes = 0  # space claimed by an inbound transfer
        self.pe_entry: QueueEntry | None = None
        self.pe_done = 0
        self.staged: QueueEntry | None = None  # req raised
        self.transfer_done: int | None = None  # None until dst space secured

    @property
    def inbound_free(self) -> int:
        return self.queue.free_bytes - self.reserved_bytes


@dataclass
class SimRecord:
    input_id: int
    label: int
    hops: int
    energy_j: float
    latency_cycles: int
    start_grove: int
    confidence: float
    prob_norm: np.ndarray


@dataclass
class SimStats:
    records: list[SimRecord]
    makespan_cycles: int
    mean_energy_j: float
    mean_latency_cycles: float
    edp_js: float
    throughput_per_cycle: float
    start_groves: list[int]
    events: list[tuple] | None = None  # (cycle, grove, kind, input_id, hops)


def simulate(X, field, cfg: SimConfig, cost: CostParams,
             start_groves=None, input_ids=None, collect_events: bool = False,
             max_cycles: int = 50_000_000) -> SimStats:
    """Run the grove ring to completion over a batch of inputs."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if cfg.n_groves != field.n_groves_:
        raise ValueError("config n_groves does not match the field")
    for grove in field.groves_:
        if len(grove.estimators) != cfg.trees_per_grove:
            raise ValueError("config trees_per_grove does not match the field")
    if X.shape[1] != field.n_features_:
        raise ValueError("input width does not match the field")

    n_labels = field.n_labels_
    entry_bytes = gamma(field.n_features_, n_labels)
    if cfg.queue_capacity_bytes < 2 * entry_bytes:
        # one slot is reserved for ring traffic, so injection needs a second
        raise ValueError(
            f"queue capacity must hold at least two {entry_bytes}-byte entries"
        )
    max_hops = cfg.max_hops if cfg.max_hops is not None else cfg.n_groves
    ids = list(range(len(X))) if input_ids is None else list(input_ids)
    if start_groves is None:
        start_groves = [start_grove_for(cfg.seed, i, cfg.n_groves) for i in ids]
    starts = [int(s) for s in start_groves]

    units = [
        GroveUnit(grove, i, DataQueue(cfg.queue_capacity_bytes, entry_bytes))
        for i, grove in enumerate(field.groves_)
    ]
    pending: list[tuple[int, int]] = []  # (arrival_cycle, input index), in order
    for i in range(len(X)):
        arrival = 0 if cfg.arrival == "batch_at_zero" else i * cfg.arrival_interval
        pending.append((arrival, i))
    next_dispatch = 0

    events: list[tuple] = []
    records_by_id: dict[int, SimRecord] = {}

    def log(cycle: int, grove: int, kind: str, entry: QueueEntry) -> None:
        if collect_events:
            events.append((cycle, grove, kind, entry.input_id, entry.hops))

    t = 0
    emitted = 0
    while emitted < len(X):
        if t > max_cycles:
            raise RuntimeError(f"simulation exceeded {max_cycles} cycles")

        # 1. complete in-flight grove-to-grove transfers (receiver raises ack)
        for unit in units:
            if unit.staged is not None and unit.transfer_done == t:
                dst = units[(unit.index + 1) % cfg.n_groves]
                entry = unit.staged
                entry.hops += 1
                dst.queue.push_front(entry)
                dst.reserved_bytes -= entry_bytes
                unit.staged = None
                unit.transfer_done = None
                log(t, dst.index, "ACK", entry)
                log(t, dst.index, "ENQ_N", entry)

        # 2. start transfers whose destination now has space
        for unit in units:
            if unit.staged is not None and unit.transfer_done is None:
                dst = units[(unit.index + 1) % cfg.n_groves]
                if dst.inbound_free >= entry_bytes:
                    dst.reserved_bytes += entry_bytes
                    unit.transfer_done = t + cost.t_handshake * entry_bytes
                    unit.staged.trace.handshake_bytes += entry_bytes

        # 3. retire finished PE computations
        for unit in units:
            if unit.pe_entry is not None and t >= unit.pe_done:
                entry = unit.pe_entry
                if entry.confident or entry.hops + 1 >= max_hops:
                    entry.trace.bytes_written += entry_bytes
                    entry.trace.cycles = t - entry.arrival
                    records_by_id[entry.input_id] = SimRecord(
                        input_id=entry.input_id,
                        label=entry.label,
                        hops=entry.hops + 1,
                        energy_j=energy_of(entry.trace, cost),
                        latency_cycles=t - entry.arrival,
                        start_grove=entry.start_grove,
                        confidence=entry.confidence,
                        prob_norm=entry.prob_norm,
                    )
                    emitted += 1
                    unit.pe_entry = None
                    log(t, unit.index, "PE_DONE", entry)
                    log(t, unit.index, "EMIT", entry)
                elif unit.staged is None:
                    # write back, raise req, free the PE for the next entry
                    entry.trace.bytes_written += entry_bytes
                    unit.staged = entry
                    unit.pe_entry = None
                    log(t, unit.index, "PE_DONE", entry)
                    log(t, unit.index, "REQ", entry)
                # else: previous req still pending; hold the result one cycle

        # 4. start the PE on the front queue entry
        for unit in units:
            if unit.pe_entry is None and len(unit.queue):
                entry = unit.queue.pop_front()
                out = unit.grove.predict_prob(entry.payload)
                entry.prob = entry.prob + out.dist
                entry.prob_norm = entry.prob / (entry.hops + 1)
                entry.confidence = max_diff(entry.prob_norm)
                entry.confident = entry.confidence >= cfg.thresh
                entry.label = argmax_lowest(entry.prob_norm)
                entry.trace.comparisons += out.comparisons
                entry.trace.bytes_read += entry_bytes
                entry.trace.accumulate_ops += n_labels
                latency = pe_latency_cycles(
                    cfg.trees_per_grove, cfg.parallelism, out.max_depth, n_labels, cost
                )
                unit.pe_entry = entry
                unit.pe_done = t + max(latency, 1)
                log(t, unit.index, "PE_START", entry)

        # 5. processor dispatch, one input per cycle, held on backpressure;
        # one slot per queue stays reserved for ring traffic so forwarded
        # entries can always make progress
        if next_dispatch < len(pending):
            arrival, i = pending[next_dispatch]
            if arrival <= t:
                unit = units[starts[i]]
                if unit.inbound_free >= 2 * entry_bytes:
                    entry = QueueEntry(
                        input_id=ids[i],
                        payload=X[i],
                        prob=np.zeros(n_labels),
                        hops=0,
                        arrival=arrival,
                        start_grove=starts[i],
                    )
                    entry.trace.bytes_written += entry_bytes
                    unit.queue.push_back(entry)
                    next_dispatch += 1
                    log(t, unit.index, "ENQ_P", entry)

        t += 1

    records = [records_by_id[i] for i in ids]
    mean_energy = float(np.mean([r.energy_j for r in records]))
    mean_latency = float(np.mean([r.latency_cycles for r in records]))
    makespan = t
    return SimStats(
        records=records,
        makespan_cycles=makespan,
        mean_energy_j=mean_energy,
        mean_latency_cycles=mean_latency,
        edp_js=edp(mean_energy, mean_latency, cost),
        throughput_per_cycle=len(records) / makespan,
        start_groves=starts,
        events=events if collect_events else None,
    )


def verify_event_log(events: list[tuple], expected_ids, n_groves: int) -> None:
    """Replay an event log and check single-residency and conservation.

    Each in-flight id must live in exactly one place (a queue, a PE, or
    the handshake stage) and every id must be emitted exactly once.
    Raises AssertionError on violation.
    """
    location: dict[int, str] = {}
    emitted: set[int] = set()
    for cycle, grove, kind, input_id, hops in events:
        where = location.get(input_id)
        if kind == "ENQ_P":
            assert where is None, f"id {input_id} enqueued while at {where}"
            location[input_id] = f"queue{grove}"
        elif kind == "PE_START":
            assert where == f"queue{grove}", f"id {input_id} PE_START from {where}"
            location[input_id] = f"pe{grove}"
        elif kind == "PE_DONE":
            assert where == f"pe{grove}", f"id {input_id} PE_DONE from {where}"
            location[input_id] = f"done{grove}"
        elif kind == "REQ":
            assert where == f"done{grove}", f"id {input_id} REQ from {where}"
            location[input_id] = f"stage{grove}"
        elif kind == "ACK":
            src = (grove - 1) % n_groves
            assert where == f"stage{src}", f"id {input_id} ACK from {where}"
            location[input_id] = f"ack{grove}"
        elif kind == "ENQ_N":
            assert where == f"ack{grove}", f"id {input_id} ENQ_N from {where}"
            location[input_id] = f"queue{grove}"
        elif kind == "EMIT":
            assert where == f"done{grove}", f"id {input_id} EMIT from {where}"
            assert input_id not in emitted, f"id {input_id} emitted twice"
            emitted.add(input_id)
            del location[input_id]
        else:
            raise AssertionError(f"unknown event kind {kind!r}")
    assert not location, f"ids still in flight at end of log: {sorted(location)}"
    assert emitted == set(expected_ids), "emitted ids differ from inputs"
