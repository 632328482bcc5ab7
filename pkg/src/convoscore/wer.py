"""Word error rates for speaker-attributed long-form transcripts.

Three variants share one alignment engine:

* :func:`cp_wer` — concatenated minimum-permutation WER: per-speaker word
  streams, Hungarian assignment of hypothesis to reference speakers, plain
  Levenshtein per assigned pair.
* :func:`tcp_wer` — time-constrained cpWER: words carry pseudo-intervals
  interpolated from their utterance span, and a match or substitution is
  admissible only when both pseudo-endpoints agree within a collar
  (default 5 s).  Words attributed to the wrong speaker therefore surface
  as a deletion plus an insertion.
* :func:`da_wer` — WER under the diarization-optimal (DER-minimizing,
  collar 0) speaker mapping instead of the WER-optimal one.

Counts accumulate across sessions by summation (:func:`accumulate`); the
final figure across scenarios is the arithmetic mean of scenario rates
(:func:`macro_average`).

Count convention: among all alignments with the minimal number of errors,
the reported decomposition is the one with the most correct matches.  That
optimum is unique — stream lengths plus (errors, correct) pin down
substitutions, deletions and insertions — so counts are reproducible
without any backtrace tie-breaking policy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .segments import SegLst

__all__ = [
    "WordToken",
    "ErrorCounts",
    "SpeakerAssignment",
    "interpolate_words",
    "tcp_wer",
    "cp_wer",
    "da_wer",
    "accumulate",
    "macro_average",
]


@dataclass(frozen=True)
class WordToken:
    """A single word with its interpolated pseudo-interval."""

    word: str
    pseudo_start: float
    pseudo_end: float
    speaker: str
    session_id: str


@dataclass(frozen=True)
class ErrorCounts:
    """Alignment error counts; add instances to pool sessions.

    >>> a = ErrorCounts(9, 0, 1, 0, 10)
    >>> b = ErrorCounts(87, 1, 2, 0, 90)
    >>> (a + b).error_rate
    0.04
    """

    correct: int
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    def __post_init__(self) -> None:
        for name in ("correct", "substitutions", "deletions", "insertions",
                     "reference_length"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        expected = self.correct + self.substitutions + self.deletions
        if self.reference_length != expected:
            raise ValueError(
                f"reference_length {self.reference_length} != "
                f"correct+substitutions+deletions = {expected}"
            )

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def error_rate(self) -> Optional[float]:
        """Errors over reference length; None for an empty reference."""
        if self.reference_length == 0:
            return None
        return self.errors / self.reference_length

    @classmethod
    def zero(cls) -> "ErrorCounts":
        return cls(0, 0, 0, 0, 0)

    def __add__(self, other: "ErrorCounts") -> "ErrorCounts":
        if not isinstance(other, ErrorCounts):
            return NotImplemented
        return ErrorCounts(
            self.correct + other.correct,
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.reference_length + other.reference_length,
        )

    def __radd__(self, other):
        if other == 0:
            return self
        return self.__add__(other)


@dataclass(frozen=True)
class SpeakerAssignment:
    """The speaker pairing a metric scored under.

    ``pairs`` holds (reference_speaker, hypothesis_speaker) tuples; ``None``
    on one side marks an unpaired stream (scored as pure deletions or pure
    insertions).  ``objective_value`` is total word errors for the
    ``min_wer`` criterion and the achieved DER fraction for ``min_der``.
    """

    pairs: tuple[tuple[Optional[str], Optional[str]], ...]
    criterion: Literal["min_wer", "min_der"]
    objective_value: float


def accumulate(counts: Iterable[ErrorCounts]) -> ErrorCounts:
    """Sum error counts across sessions."""
    counts = list(counts)
    if not counts:
        raise ValueError("cannot accumulate an empty collection of counts")
    return sum(counts, ErrorCounts.zero())


def macro_average(values: Iterable[float]) -> float:
    """Arithmetic mean of scenario-level rates."""
    values = list(values)
    if not values:
        raise ValueError("cannot average an empty collection of rates")
    return float(np.mean(values))


def interpolate_words(lst: SegLst) -> list[WordToken]:
    """Explode segments into word tokens with character-proportional times.

    Each word of a segment receives a pseudo-interval tiling the segment
    span, with lengths proportional to the word's character count.
    Segments whose ``words`` split to nothing yield no tokens.

    >>> from .segments import Segment
    >>> toks = interpolate_words(SegLst([Segment("s", "a", 0.0, 3.0, "a bb")]))
    >>> [(t.word, t.pseudo_start, t.pseudo_end) for t in toks]
    [('a', 0.0, 1.0), ('bb', 1.0, 3.0)]
    """
    tokens: list[WordToken] = []
    ordered = sorted(
        lst, key=lambda s: (s.start_time, s.end_time, s.speaker)
    )
    for seg in ordered:
        words = seg.words.split()
        if not words:
            continue
        lengths = np.array([len(w) for w in words], dtype=np.float64)
        edges = np.concatenate([[0.0], np.cumsum(lengths)])
        edges = seg.start_time + (seg.end_time - seg.start_time) * edges / edges[-1]
        for i, word in enumerate(words):
            tokens.append(
                WordToken(
                    word=word,
                    pseudo_start=float(edges[i]),
                    pseudo_end=float(edges[i + 1]),
                    speaker=seg.speaker,
                    session_id=seg.session_id,
                )
            )
    return tokens


# ---------------------------------------------------------------------------
# alignment engine


class _Stream:
    """One speaker's word stream as flat arrays, plus a label-free signature."""

    __slots__ = ("label", "words", "ids", "starts", "ends", "signature")

    def __init__(self, label: str, tokens: Sequence[WordToken], vocab: dict):
        self.label = label
        self.words = [t.word for t in tokens]
        self.ids = np.array(
            [vocab.setdefault(t.word, len(vocab)) for t in tokens], dtype=np.int32
        )
        self.starts = np.array([t.pseudo_start for t in tokens], dtype=np.float64)
        self.ends = np.array([t.pseudo_end for t in tokens], dtype=np.float64)
        # label-free identity; used to canonicalize speaker order so that
        # assignment ties cannot depend on labels or input file order
        self.signature = tuple(
            (t.pseudo_start, t.pseudo_end, t.word) for t in tokens
        )

    def __len__(self) -> int:
        return len(self.words)


def _streams(lst: SegLst, vocab: dict) -> list[_Stream]:
    tokens = interpolate_words(lst)
    per_speaker: dict[str, list[WordToken]] = {}
    for token in tokens:
        per_speaker.setdefault(token.speaker, []).append(token)
    streams = [_Stream(spk, toks, vocab) for spk, toks in per_speaker.items()]
    streams.sort(key=lambda s: (len(s), s.signature, s.label))
    return streams


def _align_pair(ref: _Stream, hyp: _Stream, collar: Optional[float]) -> tuple[int, int]:
    """Lexicographically optimal alignment of one stream pair.

    Returns ``(errors, correct)`` where ``errors`` is the minimal total of
    substitutions, deletions and insertions, and ``correct`` is the largest
    match count any minimal-error alignment achieves.  That pair pins the
    whole count decomposition (see :func:`_decode_counts`), so counts never
    depend on which optimal alignment a backtrace would have walked.

    The DP value packs both objectives into one integer,
    ``v = errors * (m + 1) + (m - correct)``: one extra error always
    outweighs any gain in matches, so an ordinary scalar minimum is a
    lexicographic minimum.  Vectorized along anti-diagonals; in skewed
    coordinates row ``k`` holds ``D[i, k - i]``, and a hypothesis-side
    slice reversed gives the diagonal's companion words.  Three rotating
    rows, nothing retained.
    """
    m, n = len(ref), len(hyp)
    if m == 0 or n == 0:
        return max(m, n), 0
    unit = np.int64(m + 1)
    big = np.int64(m + n + 2) * unit
    rows = [np.empty(m + 1, dtype=np.int64) for _ in range(3)]
    rows[0][0] = m
    for k in range(1, m + n + 1):
        prev2, prev1, cur = rows[(k - 2) % 3], rows[(k - 1) % 3], rows[k % 3]
        if k <= n:
            cur[0] = m + k * unit
        if k <= m:
            cur[k] = m + k * unit
        i0 = max(1, k - n)
        i1 = min(m, k - 1)
        if i0 > i1:
            continue
        equal = ref.ids[i0 - 1:i1] == hyp.ids[k - i1 - 1:k - i0][::-1]
        # match: -1 (one more correct); substitution: +unit; barred: big
        diag_cost = np.where(equal, np.int64(-1), unit)
        if collar is not None:
            hs = hyp.starts[k - i1 - 1:k - i0][::-1]
            he = hyp.ends[k - i1 - 1:k - i0][::-1]
            adm = (np.abs(ref.starts[i0 - 1:i1] - hs) <= collar) & (
                np.abs(ref.ends[i0 - 1:i1] - he) <= collar
            )
            diag_cost = np.where(adm, diag_cost, big)
        np.minimum(
            prev1[i0 - 1:i1] + unit, prev1[i0:i1 + 1] + unit, out=cur[i0:i1 + 1]
        )
        np.minimum(cur[i0:i1 + 1], prev2[i0 - 1:i1] + diag_cost, out=cur[i0:i1 + 1])
    value = int(rows[(m + n) % 3][m])
    errors, offset = divmod(value, int(unit))
    return errors, m - offset


def _decode_counts(m: int, n: int, errors: int, correct: int) -> ErrorCounts:
    """Counts from stream lengths plus the alignment optimum.

    With ``errors = S + D + I``, ``m = C + S + D`` and ``n = C + S + I``,
    fixing (errors, correct) fixes all four counts.
    """
    subs = m + n - 2 * correct - errors
    dels = m - correct - subs
    ins = n - correct - subs
    return ErrorCounts(correct, subs, dels, ins, m)


def _pair_counts(ref: _Stream, hyp: _Stream, collar: Optional[float]) -> ErrorCounts:
    errors, correct = _align_pair(ref, hyp, collar)
    return _decode_counts(len(ref), len(hyp), errors, correct)


def _empty_stream(vocab: dict) -> _Stream:
    return _Stream("", [], vocab)


def _assign_min_wer(
    ref_streams: list[_Stream],
    hyp_streams: list[_Stream],
    collar: Optional[float],
) -> tuple[list[tuple[Optional[int], Optional[int]]], int]:
    """Hungarian assignment with per-stream dummy padding.

    An unpaired reference stream costs its full word count (all deletions);
    an unpaired hypothesis stream likewise (all insertions).  Cell costs use
    the same errors-then-correct lexicographic packing as the pairwise DP
    (every reference stream lands in exactly one pair, so the correct-count
    offsets sum to a constant and the packing stays additive); assignments
    tied on total errors therefore still agree on total counts.  Returns
    index pairs into the two stream lists (None marks a dummy) and total
    errors.
    """
    n_ref, n_hyp = len(ref_streams), len(hyp_streams)
    size = n_ref + n_hyp
    if size == 0:
        return [], 0
    unit = sum(len(s) for s in ref_streams) + 1
    cost = np.zeros((size, size), dtype=np.int64)
    for r, ref in enumerate(ref_streams):
        for h, hyp in enumerate(hyp_streams):
            errors, correct = _align_pair(ref, hyp, collar)
            cost[r, h] = errors * unit + (len(ref) - correct)
        cost[r, n_hyp:] = len(ref) * unit + len(ref)
    for h, hyp in enumerate(hyp_streams):
        cost[n_ref:, h] = len(hyp) * unit
    rows, cols = linear_sum_assignment(cost)
    pairs: list[tuple[Optional[int], Optional[int]]] = []
    total = 0
    for r, c in zip(rows, cols):
        ref_index = r if r < n_ref else None
        hyp_index = c if c < n_hyp else None
        if ref_index is None and hyp_index is None:
            continue
        pairs.append((ref_index, hyp_index))
        total += int(cost[r, c]) // unit
    return pairs, total


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


def _scored_wer(
    ref: SegLst, hyp: SegLst, collar: Optional[float], criterion: str
) -> tuple[ErrorCounts, SpeakerAssignment]:
    _check_sessions(ref, hyp)
    vocab: dict = {}
    ref_streams = _streams(ref, vocab)
    hyp_streams = _streams(hyp, vocab)
    index_pairs, total = _assign_min_wer(ref_streams, hyp_streams, collar)
    counts = ErrorCounts.zero()
    label_pairs = []
    for ref_index, hyp_index in index_pairs:
        ref_stream = ref_streams[ref_index] if ref_index is not None else _empty_stream(vocab)
        hyp_stream = hyp_streams[hyp_index] if hyp_index is not None else _empty_stream(vocab)
        counts = counts + _pair_counts(ref_stream, hyp_stream, collar)
        label_pairs.append(
            (
                ref_stream.label if ref_index is not None else None,
                hyp_stream.label if hyp_index is not None else None,
            )
        )
    label_pairs.sort(key=lambda p: (p[0] is None, p[0] or "", p[1] is None, p[1] or ""))
    assignment = SpeakerAssignment(tuple(label_pairs), "min_wer", float(total))
    return counts, assignment


def tcp_wer(
    ref: SegLst, hyp: SegLst, collar: float = 5.0
) -> tuple[ErrorCounts, SpeakerAssignment]:
    """Time-constrained concatenated minimum-permutation WER.

    Both inputs must already be normalized with the same text profile and
    belong to one common session.  A word pair is matchable only when the
    pseudo-interval endpoints agree within ``collar`` seconds on both ends.
    """
    if collar < 0:
        raise ValueError(f"collar must be non-negative, got {collar}")
    return _scored_wer(ref, hyp, float(collar), "min_wer")


def cp_wer(ref: SegLst, hyp: SegLst) -> tuple[ErrorCounts, SpeakerAssignment]:
    """Concatenated minimum-permutation WER (no time constraint)."""
    return _scored_wer(ref, hyp, None, "min_wer")


def da_wer(ref: SegLst, hyp: SegLst) -> tuple[ErrorCounts, SpeakerAssignment]:
    """WER under the DER-optimal speaker mapping (collar 0).

    The speaker pairing comes from diarization overlap, not from word
    errors, so da_wer upper-bounds cp_wer on the same input.  With an
    empty reference or hypothesis there is no overlap to map, so every
    stream is counted unmapped and the mapping objective reports 0.0.
    """
    from .diarization import optimal_mapping

    _check_sessions(ref, hyp)
    if len(ref) == 0 or len(hyp) == 0:
        mapping, der_value = {}, 0.0
    else:
        mapping, der_value = optimal_mapping(ref, hyp, collar=0.0)
    vocab: dict = {}
    ref_streams = {s.label: s for s in _streams(ref, vocab)}
    hyp_streams = {s.label: s for s in _streams(hyp, vocab)}
    counts = ErrorCounts.zero()
    pairs = []
    mapped_hyp = set()
    for ref_label in sorted(ref_streams):
        hyp_label = mapping.get(ref_label)
        if hyp_label is not None and hyp_label in hyp_streams:
            mapped_hyp.add(hyp_label)
            counts = counts + _pair_counts(
                ref_streams[ref_label], hyp_streams[hyp_label], None
            )
            pairs.append((ref_label, hyp_label))
        else:
            counts = counts + _pair_counts(
                ref_streams[ref_label], _empty_stream(vocab), None
            )
            pairs.append((ref_label, None))
    for hyp_label in sorted(set(hyp_streams) - mapped_hyp):
        counts = counts + _pair_counts(
            _empty_stream(vocab), hyp_streams[hyp_label], None
        )
        pairs.append((None, hyp_label))
    assignment = SpeakerAssignment(tuple(pairs), "min_der", float(der_value))
    return counts, assignment
