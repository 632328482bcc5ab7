"""Conversation dynamics: occupancy and turn-taking events.

The event taxonomy works on inter-pausal units (IPUs): per speaker,
segments separated by at most ``ipu_max_pause`` seconds of silence
(default 0.5 s, inclusive) are merged into one IPU.  On top of IPUs:

* pause — a silence longer than 0.5 s between two IPUs of one speaker;
* gap — a silence longer than 0.5 s between IPUs of different speakers;
* backchannel — an overlapping IPU fully contained in the primary
  speaker's IPU and shorter than ``backchannel_max`` (default 1.0 s);
* interruption — any other overlapping onset (the classification of
  overlaps is total: contained-and-short means backchannel, everything
  else is an interruption);
* turn — a maximal run of same-speaker IPUs in global start order.

Occupancy splits a session span into silence / single-speaker / overlap
percentages that sum to 100.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .intervals import activity_counts, merge_intervals
from .segments import SegLst

__all__ = [
    "OccupancyStats",
    "EventParams",
    "TurnEvent",
    "EventKindStats",
    "occupancy",
    "extract_events",
    "event_duration_stats",
    "EVENT_KINDS",
]

EVENT_KINDS = ("ipu", "pause", "gap", "backchannel", "interruption", "turn")


@dataclass(frozen=True)
class OccupancyStats:
    """Percentages of a session span by simultaneous speaker count."""

    silence_pct: float
    single_speaker_pct: float
    overlap_pct: float


@dataclass(frozen=True)
class EventParams:
    ipu_max_pause: float = 0.5
    backchannel_max: float = 1.0
    interruption_tail: float = 1.0

    def __post_init__(self) -> None:
        for name in ("ipu_max_pause", "backchannel_max", "interruption_tail"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class TurnEvent:
    """One detected event; ``secondary`` is set for gap, backchannel and
    interruption (the speaker entering), ``None`` otherwise."""

    kind: str
    start: float
    end: float
    primary: str
    secondary: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        needs_secondary = self.kind in ("gap", "backchannel", "interruption")
        if needs_secondary != (self.secondary is not None):
            raise ValueError(f"{self.kind} events need secondary={needs_secondary}")
        if not self.end > self.start:
            raise ValueError("event must have positive duration")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class EventKindStats:
    count: int
    mean: float
    median: float
    p10: float
    p90: float


def occupancy(lst: SegLst, span: tuple[float, float]) -> OccupancyStats:
    """Silence / single / overlap percentages over ``span``.

    ``span`` must cover every segment.  An empty session is all silence.

    >>> from .segments import Segment
    >>> lst = SegLst([Segment("s", "a", 0.0, 4.0, "w"),
    ...               Segment("s", "b", 3.0, 5.0, "w")])
    >>> occ = occupancy(lst, (0.0, 10.0))
    >>> (occ.silence_pct, occ.single_speaker_pct, occ.overlap_pct)
    (50.0, 40.0, 10.0)
    """
    t0, t1 = float(span[0]), float(span[1])
    if not t1 > t0:
        raise ValueError(f"span must have positive length, got {span}")
    for seg in lst:
        if seg.start_time < t0 or seg.end_time > t1:
            raise ValueError(
                f"span {span} does not cover segment "
                f"[{seg.start_time}, {seg.end_time}]"
            )
    if len(lst) == 0:
        return OccupancyStats(100.0, 0.0, 0.0)
    timelines = [
        merge_intervals([(s.start_time, s.end_time) for s in segs])
        for segs in lst.by_speaker().values()
    ]
    # sentinel row makes the atomic grid span the whole window
    sentinel = np.asarray([[t0, t1]], dtype=np.float64)
    bounds, active = activity_counts(timelines + [sentinel])
    lengths = np.diff(bounds)
    counts = active[:-1].sum(axis=0)
    width = t1 - t0
    silence = float(np.sum(lengths[counts == 0])) / width * 100.0
    single = float(np.sum(lengths[counts == 1])) / width * 100.0
    overlap = float(np.sum(lengths[counts >= 2])) / width * 100.0
    return OccupancyStats(silence, single, overlap)


@dataclass(frozen=True)
class _Ipu:
    speaker: str
    start: float
    end: float


def _build_ipus(lst: SegLst, max_pause: float) -> list[_Ipu]:
    ipus: list[_Ipu] = []
    for speaker, segs in lst.by_speaker().items():
        ordered = sorted(segs, key=lambda s: (s.start_time, s.end_time))
        start = ordered[0].start_time
        end = ordered[0].end_time
        for seg in ordered[1:]:
            if seg.start_time - end <= max_pause:
                end = max(end, seg.end_time)
            else:
                ipus.append(_Ipu(speaker, start, end))
                start, end = seg.start_time, seg.end_time
        ipus.append(_Ipu(speaker, start, end))
    ipus.sort(key=lambda u: (u.start, -(u.end - u.start), u.speaker))
    return ipus


def extract_events(lst: SegLst, params: EventParams = EventParams()) -> list[TurnEvent]:
    """Detect all turn-taking events in one session.

    Returns the full list (IPUs, pauses, gaps, backchannels, interruptions
    and turns) sorted by (start, end, kind); deterministic and independent
    of input segment order.
    """
    sessions = lst.sessions()
    if len(sessions) > 1:
        raise ValueError(f"expected a single session, got {set(sessions)}")
    if len(lst) == 0:
        return []
    ipus = _build_ipus(lst, params.ipu_max_pause)
    events: list[TurnEvent] = [
        TurnEvent("ipu", u.start, u.end, u.speaker) for u in ipus
    ]

    # silences: complement of the union of all IPUs, classified by the
    # bounding IPUs (latest-starting on the left on ties, then label)
    union = merge_intervals([(u.start, u.end) for u in ipus])
    for left, right in zip(union[:-1], union[1:]):
        silence_start, silence_end = float(left[1]), float(right[0])
        duration = silence_end - silence_start
        if duration <= params.ipu_max_pause:
            continue
        before = max(
            (u for u in ipus if u.end == silence_start),
            key=lambda u: (u.start, u.speaker),
        )
        after = min(
            (u for u in ipus if u.start == silence_end),
            key=lambda u: (u.end, u.speaker),
        )
        if before.speaker == after.speaker:
            events.append(
                TurnEvent("pause", silence_start, silence_end, before.speaker)
            )
        else:
            events.append(
                TurnEvent("gap", silence_start, silence_end,
                          before.speaker, after.speaker)
            )

    # overlaps: secondary onset strictly inside the primary's IPU (equal
    # onsets take the longer IPU as primary via the sort order)
    for i, primary in enumerate(ipus):
        for secondary in ipus[i + 1:]:
            if secondary.start >= primary.end:
                break
            if secondary.speaker == primary.speaker:
                continue
            overlap_end = min(primary.end, secondary.end)
            contained = secondary.end <= primary.end
            short = (secondary.end - secondary.start) < params.backchannel_max
            kind = "backchannel" if contained and short else "interruption"
            events.append(
                TurnEvent(kind, secondary.start, overlap_end,
                          primary.speaker, secondary.speaker)
            )

    # turns: maximal same-speaker runs of IPUs in global start order
    turn_start = ipus[0].start
    turn_end = ipus[0].end
    turn_speaker = ipus[0].speaker
    for u in ipus[1:]:
        if u.speaker == turn_speaker:
            turn_end = max(turn_end, u.end)
        else:
            events.append(TurnEvent("turn", turn_start, turn_end, turn_speaker))
            turn_start, turn_end, turn_speaker = u.start, u.end, u.speaker
    events.append(TurnEvent("turn", turn_start, turn_end, turn_speaker))

    events.sort(key=lambda e: (e.start, e.end, e.kind, e.primary, e.secondary or ""))
    return events


def event_duration_stats(events: Iterable[TurnEvent]) -> dict[str, EventKindStats]:
    """Duration summary (count, mean, median, p10, p90) per event kind."""
    groups: dict[str, list[float]] = {}
    for event in events:
        groups.setdefault(event.kind, []).append(event.duration)
    stats = {}
    for kind in EVENT_KINDS:
        durations = groups.get(kind)
        if not durations:
            continue
        arr = np.asarray(durations, dtype=np.float64)
        stats[kind] = EventKindStats(
            count=int(arr.size),
            mean=float(np.mean(arr)),
            median=float(np.percentile(arr, 50)),
            p10=float(np.percentile(arr, 10)),
            p90=float(np.percentile(arr, 90)),
        )
    return stats
