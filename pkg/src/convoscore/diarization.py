"""Diarization error metrics: DER, JER and speaker counting.

DER follows the NIST convention: a collar (default 0.25 s) around every
reference segment boundary is excised from scoring, miss / false alarm /
confusion are accumulated instant-by-instant over the remaining timeline,
and the denominator is the scored reference speaker-time (overlap regions
count once per active speaker).  The reference-to-hypothesis speaker
mapping maximizes scored overlap (Hungarian), which is exactly the
quantity the confusion term credits, so tied mappings cannot change DER.

JER is averaged over reference speakers: each one scores
``100 * (1 - |A & B| / (A | B|))`` against its mapped hypothesis speaker,
with that speaker's own boundary collar excised; unmapped reference
speakers score 100.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .intervals import intersect, merge_intervals, subtract, total_length, activity_counts
from .segments import SegLst

__all__ = [
    "DiarReport",
    "SpeakerCountReport",
    "evaluate_diarization",
    "der",
    "jer",
    "optimal_mapping",
    "speaker_count_report",
]


@dataclass(frozen=True)
class DiarReport:
    """Complete diarization scoring result for one session.

    ``der`` is a fraction; ``jer`` and ``per_speaker_jer`` are percentages
    in [0, 100]; ``miss``, ``false_alarm``, ``confusion`` and
    ``total_reference_speech`` are seconds of scored time.
    """

    der: float
    jer: float
    miss: float
    false_alarm: float
    confusion: float
    total_reference_speech: float
    per_speaker_jer: Mapping[str, float]
    mapping: Mapping[str, str]
    ref_speaker_count: int
    hyp_speaker_count: int


@dataclass(frozen=True)
class SpeakerCountReport:
    ref_speakers: int
    hyp_speakers: int
    difference: int


def _check_sessions(ref: SegLst, hyp: SegLst) -> None:
    ref_sessions = set(ref.sessions())
    hyp_sessions = set(hyp.sessions())
    if len(ref_sessions) > 1 or len(hyp_sessions) > 1:
        raise ValueError(
            f"expected a single session per side, got reference {ref_sessions} "
            f"and hypothesis {hyp_sessions}"
        )
    if ref_sessions and hyp_sessions and ref_sessions != hyp_sessions:
        raise ValueError(
            f"mismatched session ids: reference {ref_sessions}, "
            f"hypothesis {hyp_sessions}"
        )


def _timelines(lst: SegLst) -> dict[str, np.ndarray]:
    spans: dict[str, list[tuple[float, float]]] = {}
    for seg in lst:
        spans.setdefault(seg.speaker, []).append((seg.start_time, seg.end_time))
    return {spk: merge_intervals(sp) for spk, sp in spans.items()}


def _boundary_collars(lst: SegLst, collar: float) -> np.ndarray:
    """Excision regions: [b - collar, b + collar] around segment boundaries."""
    if collar <= 0:
        return np.empty((0, 2), dtype=np.float64)
    spans = []
    for seg in lst:
        spans.append((seg.start_time - collar, seg.start_time + collar))
        spans.append((seg.end_time - collar, seg.end_time + collar))
    return merge_intervals(spans)


def _canonical_order(timelines: dict[str, np.ndarray]) -> list[str]:
    # label-free ordering so that assignment ties cannot depend on labels
    return sorted(timelines, key=lambda spk: (timelines[spk].shape[0],
                                              tuple(timelines[spk].ravel()),
                                              spk))


def evaluate_diarization(ref: SegLst, hyp: SegLst, collar: float = 0.25) -> DiarReport:
    """Score a hypothesis against a reference; see the module docstring.

    Raises ``ValueError`` for an empty reference or when the collar excises
    all scored reference speech.
    """
    if collar < 0:
        raise ValueError(f"collar must be non-negative, got {collar}")
    _check_sessions(ref, hyp)
    if len(ref) == 0:
        raise ValueError("DER is undefined for an empty reference")

    ref_tl = _timelines(ref)
    hyp_tl = _timelines(hyp)
    excised = _boundary_collars(ref, collar)

    ref_order = _canonical_order(ref_tl)
    hyp_order = _canonical_order(hyp_tl)
    ref_scored = {spk: subtract(ref_tl[spk], excised) for spk in ref_order}
    hyp_scored = {spk: subtract(hyp_tl[spk], excised) for spk in hyp_order}

    denominator = sum(total_length(ref_scored[spk]) for spk in ref_order)
    if denominator <= 0:
        raise ValueError("collar excised all scored reference speech")

    # Hungarian mapping maximizing scored ref/hyp overlap
    overlap = np.zeros((len(ref_order), len(hyp_order)), dtype=np.float64)
    for i, r in enumerate(ref_order):
        for j, h in enumerate(hyp_order):
            overlap[i, j] = total_length(intersect(ref_scored[r], hyp_scored[h]))
    mapping: dict[str, str] = {}
    if overlap.size:
        rows, cols = linear_sum_assignment(-overlap)
        for i, j in zip(rows, cols):
            if overlap[i, j] > 0:
                mapping[ref_order[i]] = hyp_order[j]

    # instant-by-instant miss / false alarm / confusion over atomic intervals
    sets = [ref_scored[r] for r in ref_order] + [hyp_scored[h] for h in hyp_order]
    bounds, active = activity_counts(sets)
    n_ref_streams = len(ref_order)
    if bounds.size:
        lengths = np.diff(bounds)
        n_r = active[:n_ref_streams].sum(axis=0)
        n_h = active[n_ref_streams:].sum(axis=0)
        n_correct = np.zeros(lengths.shape[0], dtype=np.int64)
        for i, r in enumerate(ref_order):
            h = mapping.get(r)
            if h is None:
                continue
            j = hyp_order.index(h)
            n_correct += active[i] & active[n_ref_streams + j]
        miss = float(np.sum(np.maximum(0, n_r - n_h) * lengths))
        false_alarm = float(np.sum(np.maximum(0, n_h - n_r) * lengths))
        confusion = float(np.sum((np.minimum(n_r, n_h) - n_correct) * lengths))
    else:
        miss = false_alarm = confusion = 0.0

    der_value = (miss + false_alarm + confusion) / denominator

    # JER: per reference speaker, with that speaker's own boundary collar
    per_speaker: dict[str, float] = {}
    for spk in sorted(ref_tl):
        own = ref.filter(lambda s, _spk=spk: s.speaker == _spk)
        own_excised = _boundary_collars(own, collar)
        a = subtract(ref_tl[spk], own_excised)
        mapped = mapping.get(spk)
        if mapped is None:
            # unmapped with no scoreable speech left means nothing was missed
            per_speaker[spk] = 100.0 if total_length(a) > 0 else 0.0
            continue
        b = subtract(hyp_tl[mapped], own_excised)
        inter = total_length(intersect(a, b))
        union = total_length(a) + total_length(b) - inter
        per_speaker[spk] = 0.0 if union <= 0 else 100.0 * (1.0 - inter / union)
    jer_value = float(np.mean(list(per_speaker.values())))

    return DiarReport(
        der=der_value,
        jer=jer_value,
        miss=miss,
        false_alarm=false_alarm,
        confusion=confusion,
        total_reference_speech=denominator,
        per_speaker_jer=per_speaker,
        mapping=mapping,
        ref_speaker_count=len(ref_tl),
        hyp_speaker_count=len(hyp_tl),
    )


def der(ref: SegLst, hyp: SegLst, collar: float = 0.25) -> float:
    """Diarization error rate as a fraction."""
    return evaluate_diarization(ref, hyp, collar).der


def jer(ref: SegLst, hyp: SegLst, collar: float = 0.25) -> float:
    """Jaccard error rate as a percentage."""
    return evaluate_diarization(ref, hyp, collar).jer


def optimal_mapping(
    ref: SegLst, hyp: SegLst, collar: float = 0.0
) -> tuple[dict[str, str], float]:
    """DER-optimal speaker mapping and the DER it achieves."""
    report = evaluate_diarization(ref, hyp, collar)
    return dict(report.mapping), report.der


def speaker_count_report(ref: SegLst, hyp: SegLst) -> SpeakerCountReport:
    _check_sessions(ref, hyp)
    n_ref = len({seg.speaker for seg in ref})
    n_hyp = len({seg.speaker for seg in hyp})
    return SpeakerCountReport(n_ref, n_hyp, n_hyp - n_ref)
