"""Architecture-free confidence-thresholded grove evaluation.

An input starts at a seeded-random grove and accumulates grove
probability distributions hop by hop around the ring; evaluation stops
as soon as the normalized running mean is confident enough (difference
between its two largest entries reaches the threshold) or the hop cap
is exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

__all__ = [
    "EvalConfig",
    "EvalResult",
    "max_diff",
    "gc_eval",
    "accuracy",
    "avg_hops",
    "start_grove_for",
    "argmax_lowest",
]


@dataclass(frozen=True)
class EvalConfig:
    thresh: float = 0.5
    max_hops: int | None = None  # None -> number of groves
    seed: int = 0
    multi_output: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.thresh < 1.0:
            raise ValueError(f"thresh must lie in (0, 1), got {self.thresh}")
        if self.max_hops is not None and self.max_hops < 1:
            raise ValueError(f"max_hops must be >= 1, got {self.max_hops}")


@dataclass
class EvalResult:
    input_id: int
    prob_norm: np.ndarray
    label: int
    hops: int
    start_grove: int
    confidence: float
    # per-hop counters for the cost model
    hop_comparisons: list[int] = dataclass_field(default_factory=list)
    hop_max_depths: list[int] = dataclass_field(default_factory=list)

    @property
    def comparisons(self) -> int:
        return sum(self.hop_comparisons)


def argmax_lowest(prob: np.ndarray) -> int:
    """Argmax breaking ties toward the lowest class id."""
    return int(np.argmax(prob))


def max_diff(prob) -> float:
    """Confidence: |max1 - max2| of the two largest values.

    For multi-output inputs (2-D array / sequence of arrays) returns the
    minimum of the per-output differences.
    """
    arr = np.asarray(prob, dtype=np.float64)
    if arr.ndim == 2:
        return min(max_diff(row) for row in arr)
    if arr.ndim != 1 or len(arr) < 2:
        raise ValueError("max_diff needs at least 2 class probabilities")
    top2 = np.partition(arr, -2)[-2:]
    return float(abs(top2[1] - top2[0]))


def start_grove_for(seed: int, input_id: int, n_groves: int) -> int:
    """Per-input start grove, independent of batch order."""
    return int(np.random.default_rng([seed, input_id]).integers(n_groves))


def gc_eval(X, field, cfg: EvalConfig, start_groves=None, input_ids=None) -> list[EvalResult]:
    """Evaluate a batch against a grove field (``field.groves_``).

    ``start_groves`` overrides the seeded per-input start draw, which is
    how simulator runs are replayed for equivalence checks.
    """
    groves = field.groves_
    n_groves = len(groves)
    if n_groves == 0:
        raise ValueError("field has no groves")
    max_hops = cfg.max_hops if cfg.max_hops is not None else n_groves
    if not 1 <= max_hops <= n_groves:
        raise ValueError(f"max_hops must lie in [1, {n_groves}], got {max_hops}")
    n_labels = field.n_labels_

    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    ids = list(range(len(X))) if input_ids is None else list(input_ids)
    if start_groves is not None and len(start_groves) != len(X):
        raise ValueError("start_groves must align with X")

    results = []
    for i, x in enumerate(X):
        if start_groves is not None:
            start = int(start_groves[i])
            if not 0 <= start < n_groves:
                raise ValueError(f"start grove {start} out of range [0, {n_groves})")
        else:
            start = start_grove_for(cfg.seed, ids[i], n_groves)
        prob = np.zeros(n_labels)
        hop_comparisons: list[int] = []
        hop_depths: list[int] = []
        prob_norm = prob
        confidence = 0.0
        hops = 0
        for j in range(max_hops):
            out = groves[(start + j) % n_groves].predict_prob(x)
            prob = prob + out.dist
            prob_norm = prob / (j + 1)
            hop_comparisons.append(out.comparisons)
            hop_depths.append(out.max_depth)
            confidence = max_diff(prob_norm)
            hops = j + 1
            if confidence >= cfg.thresh:
                break
        results.append(
            EvalResult(
                input_id=ids[i],
                prob_norm=prob_norm,
                label=argmax_lowest(prob_norm),
                hops=hops,
                start_grove=start,
                confidence=confidence,
                hop_comparisons=hop_comparisons,
                hop_max_depths=hop_depths,
            )
        )
    return results


def accuracy(results: list[EvalResult], truth) -> float:
    """Fraction of results whose label matches the aligned truth labels."""
    truth = np.asarray(truth)
    if len(results) != len(truth):
        raise ValueError("results and truth are not aligned")
    correct = sum(1 for r, t in zip(results, truth) if r.label == int(t))
    return correct / len(results)


def avg_hops(results: list[EvalResult]) -> float:
    if not results:
        raise ValueError("no results")
    return sum(r.hops for r in results) / len(results)
