"""Segment conditioning for diarization output.

Same-speaker utterances separated by short silences are merged — gap at
most ``merge_gap`` (default 0.5 s) and merged span at most ``max_len``
(default 30 s) — and spans longer than ``max_len`` are split, preferring
cuts at internal silences whose centre lies closest to an integer multiple
of ``target_len`` (default 10 s) from the span start; a span without
internal silence is cut at its midpoint, with the words divided by the
pseudo-interval midpoint rule.

The operation runs to an internal fixpoint, so conditioning an already
conditioned list changes nothing; merging bridges the short silences it
swallows (the span becomes the hull), splitting partitions spans exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .segments import SegLst, Segment

__all__ = ["PostprocParams", "condition_segments"]


@dataclass(frozen=True)
class PostprocParams:
    merge_gap: float = 0.5
    max_len: float = 30.0
    target_len: float = 10.0

    def __post_init__(self) -> None:
        if self.merge_gap < 0:
            raise ValueError("merge_gap must be non-negative")
        if not 0 < self.target_len <= self.max_len:
            raise ValueError("need 0 < target_len <= max_len")


@dataclass(frozen=True)
class _Piece:
    """A work-in-progress span with its constituent (start, end, words)."""

    start: float
    end: float
    parts: tuple[tuple[float, float, str], ...]

    def words(self) -> str:
        return " ".join(w for _, _, w in self.parts if w)


def _merge_pass(segments: list[tuple[float, float, str]],
                params: PostprocParams) -> list[_Piece]:
    """Greedy left-to-right merging under the gap and span constraints."""
    pieces: list[_Piece] = []
    current: list[tuple[float, float, str]] = [segments[0]]
    cur_start = segments[0][0]
    cur_end = segments[0][1]
    for seg in segments[1:]:
        start, end, _ = seg
        gap = start - cur_end
        union_end = max(cur_end, end)
        if gap <= params.merge_gap and union_end - cur_start <= params.max_len:
            current.append(seg)
            cur_end = union_end
        else:
            pieces.append(_Piece(cur_start, cur_end, tuple(current)))
            current = [seg]
            cur_start, cur_end = start, end
    pieces.append(_Piece(cur_start, cur_end, tuple(current)))
    return pieces


def _internal_gaps(piece: _Piece) -> list[tuple[int, float, float]]:
    """Positive silences between constituents: (split index, gap start, end)."""
    gaps = []
    run_end = piece.parts[0][1]
    for index in range(1, len(piece.parts)):
        start = piece.parts[index][0]
        if start > run_end:
            gaps.append((index, run_end, start))
        run_end = max(run_end, piece.parts[index][1])
    return gaps


def _tile_split(piece: _Piece, cut: float) -> tuple[_Piece, _Piece]:
    """Cut a silence-free span at ``cut``; words go by pseudo-midpoint."""
    words = piece.words().split()
    left_words: list[str] = []
    right_words: list[str] = []
    if words:
        lengths = np.array([len(w) for w in words], dtype=np.float64)
        edges = np.concatenate([[0.0], np.cumsum(lengths)])
        edges = piece.start + (piece.end - piece.start) * edges / edges[-1]
        for i, word in enumerate(words):
            midpoint = (edges[i] + edges[i + 1]) / 2.0
            (left_words if midpoint <= cut else right_words).append(word)
    left = _Piece(piece.start, cut, ((piece.start, cut, " ".join(left_words)),))
    right = _Piece(cut, piece.end, ((cut, piece.end, " ".join(right_words)),))
    return left, right


def _split(piece: _Piece, params: PostprocParams) -> list[_Piece]:
    if piece.end - piece.start <= params.max_len:
        return [piece]
    gaps = _internal_gaps(piece)
    if gaps:
        # cut at the silence whose centre best matches a multiple of
        # target_len from the span start (earliest silence on a tie)
        best = None
        for index, gap_start, gap_end in gaps:
            centre = (gap_start + gap_end) / 2.0
            k = max(1.0, np.round((centre - piece.start) / params.target_len))
            distance = abs(centre - (piece.start + k * params.target_len))
            if best is None or distance < best[0]:
                best = (distance, index, gap_start, gap_end)
        _, index, gap_start, gap_end = best
        left = _Piece(piece.start, gap_start, piece.parts[:index])
        right = _Piece(gap_end, piece.end, piece.parts[index:])
    else:
        left, right = _tile_split(piece, (piece.start + piece.end) / 2.0)
    return _split(left, params) + _split(right, params)


def _condition_stream(
    segments: list[tuple[float, float, str]], params: PostprocParams
) -> list[tuple[float, float, str]]:
    out = segments
    # merging after a split can expose new merge opportunities; iterate to
    # a fixpoint (merges only shrink the list, so this terminates)
    while True:
        pieces = []
        for merged in _merge_pass(out, params):
            pieces.extend(_split(merged, params))
        new = [(p.start, p.end, p.words()) for p in pieces]
        if new == out:
            return out
        out = new


def condition_segments(lst: SegLst, params: PostprocParams = PostprocParams()) -> SegLst:
    """Merge and split same-speaker segments per session; see module doc.

    >>> from .segments import Segment
    >>> lst = SegLst([Segment("s", "a", 0.0, 4.0, "x"),
    ...               Segment("s", "a", 4.3, 8.0, "y")])
    >>> [(s.start_time, s.end_time, s.words) for s in condition_segments(lst)]
    [(0.0, 8.0, 'x y')]
    """
    out: list[Segment] = []
    for session_id, session in lst.by_session().items():
        for speaker, segs in session.by_speaker().items():
            stream = sorted(
                ((s.start_time, s.end_time, s.words) for s in segs)
            )
            for start, end, words in _condition_stream(stream, params):
                out.append(
                    Segment(
                        session_id=session_id,
                        speaker=speaker,
                        start_time=start,
                        end_time=end,
                        words=words,
                    )
                )
    out.sort(key=lambda s: (s.session_id, s.start_time, s.end_time, s.speaker))
    return SegLst(out)
