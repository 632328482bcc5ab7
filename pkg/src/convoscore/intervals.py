"""Interval-set algebra on float second spans.

Interval sets are (k, 2) float64 arrays of disjoint, sorted, positive-length
[start, end) spans.  All operations are deterministic and independent of the
order intervals were supplied in, which the bit-exact permutation-invariance
guarantees of the metrics rely on.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "merge_intervals",
    "total_length",
    "intersect",
    "subtract",
    "clip",
    "activity_counts",
]


def merge_intervals(spans: Iterable[Sequence[float]]) -> np.ndarray:
    """Sort and merge overlapping or touching spans; drop empty ones."""
    arr = np.asarray(list(spans), dtype=np.float64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.float64)
    arr = arr[arr[:, 1] > arr[:, 0]]
    if arr.shape[0] == 0:
        return np.empty((0, 2), dtype=np.float64)
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    arr = arr[order]
    running_end = np.maximum.accumulate(arr[:, 1])
    # span i starts a new group iff it begins after every previous end
    new_group = np.empty(arr.shape[0], dtype=bool)
    new_group[0] = True
    new_group[1:] = arr[1:, 0] > running_end[:-1]
    group = np.cumsum(new_group) - 1
    starts = arr[new_group, 0]
    ends = np.maximum.reduceat(arr[:, 1], np.flatnonzero(new_group))
    out = np.column_stack([starts, ends])
    return out[out[:, 1] > out[:, 0]]


def total_length(spans: np.ndarray) -> float:
    if spans.size == 0:
        return 0.0
    return float(np.sum(spans[:, 1] - spans[:, 0]))


def intersect(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Intersection of two merged interval sets."""
    if a.size == 0 or b.size == 0:
        return np.empty((0, 2), dtype=np.float64)
    out = []
    i = j = 0
    while i < a.shape[0] and j < b.shape[0]:
        start = max(a[i, 0], b[j, 0])
        end = min(a[i, 1], b[j, 1])
        if end > start:
            out.append((start, end))
        if a[i, 1] <= b[j, 1]:
            i += 1
        else:
            j += 1
    if not out:
        return np.empty((0, 2), dtype=np.float64)
    return np.asarray(out, dtype=np.float64)


def subtract(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Set difference a \\ b of two merged interval sets."""
    if a.size == 0:
        return np.empty((0, 2), dtype=np.float64)
    if b.size == 0:
        return a.copy()
    out = []
    j = 0
    for start, end in a:
        cursor = start
        while j < b.shape[0] and b[j, 1] <= cursor:
            j += 1
        k = j
        while k < b.shape[0] and b[k, 0] < end:
            if b[k, 0] > cursor:
                out.append((cursor, b[k, 0]))
            cursor = max(cursor, b[k, 1])
            if cursor >= end:
                break
            k += 1
        if cursor < end:
            out.append((cursor, end))
    if not out:
        return np.empty((0, 2), dtype=np.float64)
    return np.asarray(out, dtype=np.float64)


def clip(spans: np.ndarray, start: float, end: float) -> np.ndarray:
    """Restrict a merged interval set to the window [start, end)."""
    window = np.asarray([[start, end]], dtype=np.float64)
    return intersect(spans, window)


def activity_counts(interval_sets: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-constant activity over the union of all endpoints.

    Returns ``(bounds, active)`` where ``bounds`` is the sorted unique vector
    of endpoints (length m+1) and ``active`` is a (len(interval_sets), m)
    boolean matrix: set k is active on atomic interval [bounds[i],
    bounds[i+1]).  Exact for float endpoints because activity is computed by
    +1/-1 coverage at the shared endpoint positions, never by sampling.
    """
    nonempty = [s for s in interval_sets if s.size]
    if not nonempty:
        return np.empty(0, dtype=np.float64), np.zeros((len(interval_sets), 0), bool)
    bounds = np.unique(np.concatenate([s.ravel() for s in nonempty]))
    m = bounds.shape[0] - 1
    active = np.zeros((len(interval_sets), m), dtype=bool)
    for k, spans in enumerate(interval_sets):
        if not spans.size:
            continue
        delta = np.zeros(m + 1, dtype=np.int64)
        si = np.searchsorted(bounds, spans[:, 0])
        ei = np.searchsorted(bounds, spans[:, 1])
        np.add.at(delta, si, 1)
        np.add.at(delta, ei, -1)
        active[k] = np.cumsum(delta[:-1]) > 0
    return bounds, active
