"""Shared fixtures: seeded random session generators.

Everything is deterministic per seed so failures replay exactly.
"""
from __future__ import annotations

import numpy as np
import pytest

from convoscore import Segment, SegLst

VOCAB = (
    "a bb ccc dddd ok yes no right sure well there here now then what"
).split()

# populated by the acceptance tests; printed after capture ends so the
# verdict lines survive any capture mode
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_segment(speaker, start, end, words, session="s1"):
    return Segment(session, speaker, float(start), float(end), words)


def random_wer_session(rng: np.random.Generator, *, max_speakers=4, max_words=10,
                       session="s1", time_scale=30.0):
    """A (ref, hyp) pair of small sessions for alignment-oracle tests.

    Speaker counts and words per stream stay small enough for exhaustive
    assignment enumeration.  The hypothesis reuses reference words with
    random edits and time jitter, so admissibility actually binds.
    """
    def one_side(prefix, n_speakers):
        segments = []
        for k in range(n_speakers):
            n_words = int(rng.integers(0, max_words + 1))
            if n_words == 0:
                continue
            words = " ".join(rng.choice(VOCAB, size=n_words))
            start = float(np.round(rng.uniform(0, time_scale), 3))
            duration = float(np.round(rng.uniform(0.5, 10.0), 3))
            segments.append(
                make_segment(f"{prefix}{k}", start, start + duration, words,
                             session)
            )
        return segments

    n_ref = int(rng.integers(1, max_speakers + 1))
    n_hyp = int(rng.integers(0, max_speakers + 1))
    ref = SegLst(one_side("R", n_ref))
    hyp = SegLst(one_side("H", n_hyp))
    return ref, hyp


def random_diar_session(rng: np.random.Generator, *, max_speakers=4,
                        max_segments=6, session="s1", horizon=60.0):
    """A (ref, hyp) pair of timeline sessions for diarization tests."""
    def one_side(prefix, n_speakers):
        segments = []
        for k in range(n_speakers):
            for _ in range(int(rng.integers(1, max_segments + 1))):
                start = float(np.round(rng.uniform(0, horizon), 3))
                duration = float(np.round(rng.uniform(0.3, 8.0), 3))
                segments.append(
                    make_segment(f"{prefix}{k}", start, start + duration, "w",
                                 session)
                )
        return segments

    ref = SegLst(one_side("R", int(rng.integers(1, max_speakers + 1))))
    hyp = SegLst(one_side("H", int(rng.integers(1, max_speakers + 1))))
    return ref, hyp


def segments_to_interval_dict(lst: SegLst) -> dict[str, list[tuple[float, float]]]:
    out: dict[str, list[tuple[float, float]]] = {}
    for seg in lst:
        out.setdefault(seg.speaker, []).append((seg.start_time, seg.end_time))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
