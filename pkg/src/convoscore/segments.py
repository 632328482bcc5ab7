"""Segment records and the file formats they travel in.

The exchange format is a JSON array of segment objects ("segment list"), one
object per utterance, with string times serialized as numbers in seconds:

    [{"session_id": "S02", "speaker": "P08", "start_time": 73.5,
      "end_time": 76.34, "words": "let's do lunch"}]

RTTM and UEM are the usual NIST line formats for diarization interchange and
scoring-region selection.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Iterator, Mapping

__all__ = [
    "Segment",
    "SegLst",
    "UemRegion",
    "TranscriptError",
    "TranscriptParseError",
    "TranscriptSchemaError",
    "TranscriptValidationError",
    "parse_seglst",
    "serialize_seglst",
    "load_seglst",
    "dump_seglst",
    "parse_uem",
    "serialize_uem",
    "apply_uem",
    "parse_rttm",
    "serialize_rttm",
]


class TranscriptError(ValueError):
    """Base class for segment list format errors."""


class TranscriptParseError(TranscriptError):
    """The input is not syntactically valid (bad JSON, bad line format)."""


class TranscriptSchemaError(TranscriptError):
    """A record is missing a required key or has a wrongly typed value."""


class TranscriptValidationError(TranscriptError):
    """A record is well-formed but violates a semantic constraint."""


_REQUIRED_KEYS = ("session_id", "speaker", "start_time", "end_time", "words")


@dataclass(frozen=True)
class Segment:
    """One speaker-attributed utterance.

    ``extra`` holds unknown keys from the source record; they round-trip
    through serialization untouched and are ignored by every metric.
    """

    session_id: str
    speaker: str
    start_time: float
    end_time: float
    words: str
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.session_id:
            raise TranscriptValidationError("segment has empty session_id")
        if not self.speaker:
            raise TranscriptValidationError("segment has empty speaker")
        for name in ("start_time", "end_time"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise TranscriptSchemaError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise TranscriptValidationError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.start_time < 0:
            raise TranscriptValidationError(
                f"start_time must be non-negative, got {self.start_time!r}"
            )
        if not self.end_time > self.start_time:
            raise TranscriptValidationError(
                f"segment must have positive duration, got "
                f"[{self.start_time!r}, {self.end_time!r}]"
            )
        if not isinstance(self.words, str):
            raise TranscriptSchemaError(f"words must be a string, got {self.words!r}")

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time

    def to_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "session_id": self.session_id,
            "speaker": self.speaker,
            "start_time": self.start_time,
            "end_time": self.end_time,
            "words": self.words,
        }
        record.update(self.extra)
        return record

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "Segment":
        missing = [key for key in _REQUIRED_KEYS if key not in record]
        if missing:
            raise TranscriptSchemaError(f"record is missing keys {missing}: {record!r}")
        if not isinstance(record["session_id"], str):
            raise TranscriptSchemaError(f"session_id must be a string: {record!r}")
        if not isinstance(record["speaker"], str):
            raise TranscriptSchemaError(f"speaker must be a string: {record!r}")
        extra = {k: v for k, v in record.items() if k not in _REQUIRED_KEYS}
        return cls(
            session_id=record["session_id"],
            speaker=record["speaker"],
            start_time=float(record["start_time"]),
            end_time=float(record["end_time"]),
            words=record["words"],
            extra=extra,
        )


class SegLst:
    """An ordered list of :class:`Segment` with small query helpers.

    >>> lst = SegLst([Segment("s", "a", 0.0, 1.0, "hi")])
    >>> len(lst), lst.speakers()
    (1, ('a',))
    """

    __slots__ = ("segments",)

    def __init__(self, segments: Iterable[Segment] = ()) -> None:
        self.segments: tuple[Segment, ...] = tuple(segments)
        for seg in self.segments:
            if not isinstance(seg, Segment):
                raise TypeError(f"SegLst items must be Segment, got {seg!r}")

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return SegLst(self.segments[index])
        return self.segments[index]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SegLst):
            return NotImplemented
        return self.segments == other.segments

    def __repr__(self) -> str:
        return f"SegLst({len(self.segments)} segments)"

    def filter(self, predicate: Callable[[Segment], bool]) -> "SegLst":
        return SegLst(seg for seg in self.segments if predicate(seg))

    def sorted_by_start(self) -> "SegLst":
        return SegLst(
            sorted(
                self.segments,
                key=lambda s: (s.start_time, s.end_time, s.speaker),
            )
        )

    def sessions(self) -> tuple[str, ...]:
        """Distinct session ids, in first-appearance order."""
        return tuple(dict.fromkeys(seg.session_id for seg in self.segments))

    def speakers(self) -> tuple[str, ...]:
        """Distinct speaker labels, sorted."""
        return tuple(sorted({seg.speaker for seg in self.segments}))

    def by_speaker(self) -> dict[str, "SegLst"]:
        groups: dict[str, list[Segment]] = {}
        for seg in self.segments:
            groups.setdefault(seg.speaker, []).append(seg)
        return {spk: SegLst(segs) for spk, segs in sorted(groups.items())}

    def by_session(self) -> dict[str, "SegLst"]:
        groups: dict[str, list[Segment]] = {}
        for seg in self.segments:
            groups.setdefault(seg.session_id, []).append(seg)
        return {sid: SegLst(segs) for sid, segs in groups.items()}

    def map_words(self, fn: Callable[[str], str]) -> "SegLst":
        return SegLst(replace(seg, words=fn(seg.words)) for seg in self.segments)


def parse_seglst(data: str | bytes) -> SegLst:
    """Parse a JSON segment list.

    Raises :class:`TranscriptParseError` with the byte/char offset on broken
    JSON, :class:`TranscriptSchemaError` naming the record index on missing or
    wrongly typed keys, :class:`TranscriptValidationError` on bad values.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        records = json.loads(data)
    except json.JSONDecodeError as exc:
        raise TranscriptParseError(
            f"invalid JSON at offset {exc.pos}: {exc.msg}"
        ) from exc
    if not isinstance(records, list):
        raise TranscriptSchemaError(
            f"segment list must be a JSON array, got {type(records).__name__}"
        )
    segments = []
    for index, record in enumerate(records):
        if not isinstance(record, dict):
            raise TranscriptSchemaError(f"record {index} is not an object: {record!r}")
        try:
            segments.append(Segment.from_dict(record))
        except TranscriptError as exc:
            raise type(exc)(f"record {index}: {exc}") from None
    return SegLst(segments)


def serialize_seglst(lst: SegLst) -> str:
    """Serialize to the JSON array format; inverse of :func:`parse_seglst`."""
    records = [seg.to_dict() for seg in lst]
    return json.dumps(records, ensure_ascii=False, indent=1)


def load_seglst(path) -> SegLst:
    with open(path, "rb") as handle:
        return parse_seglst(handle.read())


def dump_seglst(lst: SegLst, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_seglst(lst))
        handle.write("\n")


@dataclass(frozen=True)
class UemRegion:
    """A scoring region for one session."""

    session_id: str
    start_time: float
    end_time: float

    def __post_init__(self) -> None:
        if not self.end_time > self.start_time:
            raise TranscriptValidationError(
                f"UEM region must have positive duration, got "
                f"[{self.start_time!r}, {self.end_time!r}]"
            )


def parse_uem(data: str | bytes) -> list[UemRegion]:
    """Parse NIST UEM lines: ``<session> <channel> <start> <end>``."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    regions = []
    for lineno, line in enumerate(data.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith(";;") or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise TranscriptParseError(
                f"UEM line {lineno}: expected 4 fields, got {len(parts)}: {line!r}"
            )
        session_id, _channel, start, end = parts
        try:
            region = UemRegion(session_id, float(start), float(end))
        except ValueError as exc:
            raise TranscriptParseError(f"UEM line {lineno}: {exc}") from None
        regions.append(region)
    return regions


def serialize_uem(regions: Iterable[UemRegion]) -> str:
    lines = [
        f"{r.session_id} 1 {r.start_time:.3f} {r.end_time:.3f}"
        for r in regions
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def _merged_regions(regions: Iterable[UemRegion]) -> dict[str, list[tuple[float, float]]]:
    per_session: dict[str, list[tuple[float, float]]] = {}
    for region in regions:
        per_session.setdefault(region.session_id, []).append(
            (region.start_time, region.end_time)
        )
    merged = {}
    for session_id, spans in per_session.items():
        spans.sort()
        out = [spans[0]]
        for start, end in spans[1:]:
            if start <= out[-1][1]:
                out[-1] = (out[-1][0], max(out[-1][1], end))
            else:
                out.append((start, end))
        merged[session_id] = out
    return merged


def apply_uem(lst: SegLst, regions: Iterable[UemRegion]) -> SegLst:
    """Restrict a segment list to UEM scoring regions.

    Segments fully outside every region of their session are dropped.
    Segments straddling a region edge are clipped to the region they overlap
    most (earliest region on a tie); their words are kept in full.  Sessions
    without any UEM region pass through unchanged.

    >>> lst = SegLst([Segment("s", "a", 30.0, 90.0, "w")])
    >>> out = apply_uem(lst, [UemRegion("s", 60.0, 3600.0)])
    >>> (out[0].start_time, out[0].end_time)
    (60.0, 90.0)
    """
    merged = _merged_regions(regions)
    kept = []
    for seg in lst:
        spans = merged.get(seg.session_id)
        if spans is None:
            kept.append(seg)
            continue
        best = None
        for start, end in spans:
            overlap = min(seg.end_time, end) - max(seg.start_time, start)
            if overlap > 0 and (best is None or overlap > best[0]):
                best = (overlap, start, end)
        if best is None:
            continue
        _, start, end = best
        kept.append(
            replace(
                seg,
                start_time=max(seg.start_time, start),
                end_time=min(seg.end_time, end),
            )
        )
    return SegLst(kept)


def serialize_rttm(lst: SegLst) -> str:
    """Emit NIST RTTM SPEAKER lines, times to 1 ms.

    >>> print(serialize_rttm(SegLst([Segment("S02", "P08", 73.5, 76.34, "x")])))
    SPEAKER S02 1 73.500 2.840 <NA> <NA> P08 <NA> <NA>
    <BLANKLINE>
    """
    out = io.StringIO()
    ordered = sorted(
        lst, key=lambda s: (s.session_id, s.start_time, s.end_time, s.speaker)
    )
    for seg in ordered:
        out.write(
            f"SPEAKER {seg.session_id} 1 {seg.start_time:.3f} "
            f"{seg.duration:.3f} <NA> <NA> {seg.speaker} <NA> <NA>\n"
        )
    return out.getvalue()


def parse_rttm(data: str | bytes) -> SegLst:
    """Parse RTTM SPEAKER lines into a segment list with empty words."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    segments = []
    for lineno, line in enumerate(data.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith(";;"):
            continue
        parts = line.split()
        if parts[0] != "SPEAKER":
            continue
        if len(parts) < 8:
            raise TranscriptParseError(
                f"RTTM line {lineno}: expected >= 8 fields, got {len(parts)}"
            )
        try:
            start = float(parts[3])
            duration = float(parts[4])
        except ValueError as exc:
            raise TranscriptParseError(f"RTTM line {lineno}: {exc}") from None
        segments.append(
            Segment(
                session_id=parts[1],
                speaker=parts[7],
                start_time=start,
                end_time=start + duration,
                words="",
            )
        )
    return SegLst(segments)
