"""Speaker-attributed summarization evaluation.

Pipeline: hypothesis speakers are relabeled onto reference speakers via
the time-constrained WER assignment (:func:`relabel_speakers`), both
sides are rendered as tagged text with positional speaker labels
(:func:`render_tagged`, ``[speaker 1]`` is the first to speak), a fixed
prompt asks a generation model for an attribution-preserving summary,
several summaries per side (different seeds) are cross-scored with
native ROUGE-1/2/L F1 (:func:`score_bundle_pair`), and bundle means can
be correlated against transcription quality (:func:`correlate`).

Perturbation systems (:func:`perturb`) produce controlled degradations:
word dropout, speaker reshuffling, or both.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Optional, Protocol, Sequence

import numpy as np
from scipy.stats import rankdata

from .segments import SegLst, Segment
from .wer import tcp_wer

__all__ = [
    "PROMPT_TEMPLATE",
    "TaggedTranscript",
    "SummaryBundle",
    "BundleScores",
    "RougeScores",
    "CorrelationReport",
    "GenerationRequest",
    "GenerationResponse",
    "GenerationError",
    "TransportError",
    "GenerationClient",
    "HttpGenerationClient",
    "MockGenerationClient",
    "relabel_speakers",
    "speaker_numbering",
    "render_tagged",
    "build_prompt",
    "perturb",
    "rouge_scores",
    "score_bundle_pair",
    "evaluate_bundles",
    "correlate",
    "generate_summaries",
]

PROMPT_TEMPLATE = (
    "You are provided with the transcription of a meeting\n"
    "involving a minimum of two to maximum eight participants.\n"
    "\n"
    "Please create a comprehensive summary (approximately 200 words) \n"
    "of the provided meeting transcription. Your summary should capture \n"
    "all key points, decisions, action items, and significant exchanges. \n"
    "The transcription has speakers labeled as [speaker 1], \n"
    "[speaker 2] and so on. \n"
    "Your summary must maintain these speaker attributions,\n"
    "clearly indicating who said what, proposed ideas, or took on action items.\n"
    "\n"
    "Meeting transcription: {transcription}\n"
    "Summary (write only the requested summary hereafter):"
)


@dataclass(frozen=True)
class TaggedTranscript:
    session_id: str
    text: str


@dataclass(frozen=True)
class SummaryBundle:
    """Several summaries of one session (one per generation seed)."""

    session_id: str
    summaries: tuple[str, ...]
    seeds: tuple[int, ...]
    truncated: tuple[bool, ...]

    def __post_init__(self) -> None:
        if not (len(self.summaries) == len(self.seeds) == len(self.truncated)):
            raise ValueError("summaries, seeds and truncated must align")
        if not self.summaries:
            raise ValueError("bundle must contain at least one summary")


@dataclass(frozen=True)
class RougeScores:
    rouge1: float
    rouge2: float
    rougeL: float


@dataclass(frozen=True)
class BundleScores:
    """Cross-product ROUGE for one session: matrices are (n_hyp, n_ref)."""

    session_id: str
    rouge1: tuple[tuple[float, ...], ...]
    rouge2: tuple[tuple[float, ...], ...]
    rougeL: tuple[tuple[float, ...], ...]
    mean: Mapping[str, float]
    std_error: Mapping[str, float]
    n_pairs: int


@dataclass(frozen=True)
class CorrelationReport:
    pearson: float
    spearman: float
    n: int


def _first_speech(lst: SegLst) -> dict[str, float]:
    first: dict[str, float] = {}
    for seg in sorted(lst, key=lambda s: (s.start_time, s.end_time, s.speaker)):
        first.setdefault(seg.speaker, seg.start_time)
    return first


def relabel_speakers(hyp: SegLst, ref: SegLst, collar: float = 5.0) -> SegLst:
    """Rename hypothesis speakers onto reference labels.

    Uses the time-constrained WER assignment; hypothesis speakers matched
    to a reference speaker take that label, unmatched (false alarm)
    speakers become ``speaker N`` with N counting up from the number of
    reference speakers plus one, in order of their first utterance.
    """
    _, assignment = tcp_wer(ref, hyp, collar)
    rename = {
        hyp_label: ref_label
        for ref_label, hyp_label in assignment.pairs
        if ref_label is not None and hyp_label is not None
    }
    ref_count = len({seg.speaker for seg in ref})
    first = _first_speech(hyp)
    extras = sorted(
        (spk for spk in {s.speaker for s in hyp} if spk not in rename),
        key=lambda spk: (first.get(spk, float("inf")), spk),
    )
    for index, spk in enumerate(extras, start=ref_count + 1):
        rename[spk] = f"speaker {index}"
    return SegLst(replace(seg, speaker=rename[seg.speaker]) for seg in hyp)


def speaker_numbering(lst: SegLst,
                      speaker_order: Optional[Sequence[str]] = None) -> dict[str, int]:
    """Positional numbers: 1 for the first speaker to speak, and so on.

    An explicit ``speaker_order`` pins numbers (index + 1); speakers not
    listed are appended in first-utterance order.
    """
    first = _first_speech(lst)
    numbering: dict[str, int] = {}
    if speaker_order:
        for index, spk in enumerate(speaker_order, start=1):
            numbering[spk] = index
    for spk in sorted(first, key=lambda s: (first[s], s)):
        if spk not in numbering:
            numbering[spk] = len(numbering) + 1
    return numbering


def render_tagged(lst: SegLst,
                  speaker_order: Optional[Sequence[str]] = None) -> TaggedTranscript:
    """Render ``[speaker N] words`` text, utterances in start order.

    >>> from .segments import Segment
    >>> lst = SegLst([Segment("s", "a", 0.0, 1.0, "ok"),
    ...               Segment("s", "b", 1.0, 2.0, "but yeah"),
    ...               Segment("s", "a", 2.0, 3.0, "yes")])
    >>> render_tagged(lst).text
    '[speaker 1] ok [speaker 2] but yeah [speaker 1] yes'
    """
    sessions = lst.sessions()
    if len(sessions) > 1:
        raise ValueError(f"expected a single session, got {set(sessions)}")
    numbering = speaker_numbering(lst, speaker_order)
    chunks = []
    for seg in sorted(lst, key=lambda s: (s.start_time, s.end_time, s.speaker)):
        if not seg.words.strip():
            continue
        chunks.append(f"[speaker {numbering[seg.speaker]}] {seg.words.strip()}")
    return TaggedTranscript(sessions[0] if sessions else "", " ".join(chunks))


def build_prompt(tagged: TaggedTranscript) -> str:
    """Fill the summarization prompt; the placeholder is replaced once."""
    head, _, tail = PROMPT_TEMPLATE.partition("{transcription}")
    return head + tagged.text + tail


def perturb(lst: SegLst, mode: str, seed: int, drop_probability: float = 0.5) -> SegLst:
    """Controlled degradation of a transcript.

    ``random_del`` drops each word with ``drop_probability``;
    ``random_speaker`` resamples each segment's speaker uniformly from the
    session's speaker set; ``random_del_speaker`` does both.  Deterministic
    for a given seed and segment content (input order does not matter).
    """
    if mode not in ("random_del", "random_speaker", "random_del_speaker"):
        raise ValueError(f"unknown perturbation mode {mode!r}")
    rng = np.random.default_rng(seed)
    ordered = sorted(
        lst, key=lambda s: (s.session_id, s.start_time, s.end_time, s.speaker, s.words)
    )
    speakers = sorted({seg.speaker for seg in ordered})
    out = []
    for seg in ordered:
        words = seg.words.split()
        if mode in ("random_del", "random_del_speaker") and words:
            keep = rng.random(len(words)) >= drop_probability
            words = [w for w, k in zip(words, keep) if k]
        speaker = seg.speaker
        if mode in ("random_speaker", "random_del_speaker"):
            speaker = speakers[int(rng.integers(len(speakers)))]
        out.append(replace(seg, words=" ".join(words), speaker=speaker))
    return SegLst(out)


# ---------------------------------------------------------------------------
# ROUGE


def _rouge_tokens(text: str) -> list[str]:
    from .textnorm import get_profile

    profile = get_profile("c8")
    lowered = text.lower()
    stripped = profile._strip_re.sub("", lowered) if profile._strip_re else lowered
    return stripped.split()


def _ngram_f1(hyp: list[str], ref: list[str], n: int) -> float:
    if len(hyp) < n or len(ref) < n:
        return 0.0
    def counts(tokens):
        table: dict[tuple, int] = {}
        for i in range(len(tokens) - n + 1):
            gram = tuple(tokens[i:i + n])
            table[gram] = table.get(gram, 0) + 1
        return table
    hyp_counts = counts(hyp)
    ref_counts = counts(ref)
    overlap = sum(min(c, ref_counts.get(g, 0)) for g, c in hyp_counts.items())
    precision = overlap / (len(hyp) - n + 1)
    recall = overlap / (len(ref) - n + 1)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _lcs_f1(hyp: list[str], ref: list[str]) -> float:
    if not hyp or not ref:
        return 0.0
    previous = np.zeros(len(ref) + 1, dtype=np.int64)
    for h in hyp:
        current = previous.copy()
        for j, r in enumerate(ref, start=1):
            if h == r:
                current[j] = previous[j - 1] + 1
            else:
                current[j] = max(current[j - 1], previous[j])
        previous = current
    lcs = int(previous[-1])
    if lcs == 0:
        return 0.0
    precision = lcs / len(hyp)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def rouge_scores(hypothesis: str, reference: str) -> RougeScores:
    """ROUGE-1/2/L F1 with clipped n-gram overlap; empty sides score 0.

    >>> rouge_scores("the cat sat", "the cat ran").rouge1  # doctest: +ELLIPSIS
    0.666...
    """
    hyp = _rouge_tokens(hypothesis)
    ref = _rouge_tokens(reference)
    return RougeScores(
        rouge1=_ngram_f1(hyp, ref, 1),
        rouge2=_ngram_f1(hyp, ref, 2),
        rougeL=_lcs_f1(hyp, ref),
    )


def score_bundle_pair(hyp_bundle: SummaryBundle,
                      ref_bundle: SummaryBundle) -> BundleScores:
    """Score every hypothesis summary against every reference summary."""
    if hyp_bundle.session_id != ref_bundle.session_id:
        raise ValueError(
            f"bundle session mismatch: {hyp_bundle.session_id!r} vs "
            f"{ref_bundle.session_id!r}"
        )
    matrices = {"rouge1": [], "rouge2": [], "rougeL": []}
    for hyp_summary in hyp_bundle.summaries:
        rows = {"rouge1": [], "rouge2": [], "rougeL": []}
        for ref_summary in ref_bundle.summaries:
            scores = rouge_scores(hyp_summary, ref_summary)
            rows["rouge1"].append(scores.rouge1)
            rows["rouge2"].append(scores.rouge2)
            rows["rougeL"].append(scores.rougeL)
        for key, row in rows.items():
            matrices[key].append(tuple(row))
    mean = {}
    std_error = {}
    for key, matrix in matrices.items():
        flat = np.asarray(matrix, dtype=np.float64).ravel()
        mean[key] = float(flat.mean())
        std_error[key] = (
            float(flat.std(ddof=1) / np.sqrt(flat.size)) if flat.size > 1 else 0.0
        )
    n_pairs = len(hyp_bundle.summaries) * len(ref_bundle.summaries)
    return BundleScores(
        session_id=hyp_bundle.session_id,
        rouge1=tuple(matrices["rouge1"]),
        rouge2=tuple(matrices["rouge2"]),
        rougeL=tuple(matrices["rougeL"]),
        mean=mean,
        std_error=std_error,
        n_pairs=n_pairs,
    )


def evaluate_bundles(hyp_bundles: Sequence[SummaryBundle],
                     ref_bundles: Sequence[SummaryBundle]) -> list[BundleScores]:
    """Pair bundles by session id and score each pair."""
    hyp_by_session = {b.session_id: b for b in hyp_bundles}
    ref_by_session = {b.session_id: b for b in ref_bundles}
    if len(hyp_by_session) != len(hyp_bundles) or len(ref_by_session) != len(ref_bundles):
        raise ValueError("duplicate session ids in bundles")
    if set(hyp_by_session) != set(ref_by_session):
        raise ValueError(
            f"bundle sessions differ: {sorted(set(hyp_by_session) ^ set(ref_by_session))}"
        )
    return [
        score_bundle_pair(hyp_by_session[sid], ref_by_session[sid])
        for sid in sorted(hyp_by_session)
    ]


def correlate(x: Iterable[float], y: Iterable[float]) -> CorrelationReport:
    """Pearson and Spearman correlation; needs n >= 3 and variance."""
    xs = np.asarray(list(x), dtype=np.float64)
    ys = np.asarray(list(y), dtype=np.float64)
    if xs.shape != ys.shape:
        raise ValueError(f"length mismatch: {xs.shape[0]} vs {ys.shape[0]}")
    n = xs.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        raise ValueError("correlation undefined for constant input")

    def pearson(a: np.ndarray, b: np.ndarray) -> float:
        a = a - a.mean()
        b = b - b.mean()
        return float(np.dot(a, b) / np.sqrt(np.dot(a, a) * np.dot(b, b)))

    spearman = pearson(rankdata(xs), rankdata(ys))
    return CorrelationReport(pearson=pearson(xs, ys), spearman=spearman, n=n)


# ---------------------------------------------------------------------------
# generation clients


class GenerationError(RuntimeError):
    """The generation service returned an unusable response."""


class TransportError(GenerationError):
    """The generation service could not be reached (after retries)."""


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    seed: int
    temperature: float = 0.7
    max_tokens: int = 1024


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    truncated: bool = False
    meta: Mapping[str, object] = field(default_factory=dict)


class GenerationClient(Protocol):
    def generate(self, request: GenerationRequest) -> GenerationResponse: ...


class HttpGenerationClient:
    """Chat-completion client over HTTPS with retry and backoff.

    The API key is read from the environment variable named by
    ``api_key_env`` at request time and sent as a bearer token; it is
    never written to logs or reports.
    """

    def __init__(
        self,
        url: str,
        model: str,
        *,
        api_key_env: str = "CONVOSCORE_API_KEY",
        timeout: float = 120.0,
        max_retries: int = 3,
        backoff: float = 1.0,
    ) -> None:
        self.url = url
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        import requests

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "seed": request.seed,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                response = requests.post(
                    self.url, json=payload, headers=headers, timeout=self.timeout
                )
                if response.status_code >= 500 or response.status_code == 429:
                    raise requests.RequestException(
                        f"retryable status {response.status_code}"
                    )
                response.raise_for_status()
                body = response.json()
                choice = body["choices"][0]
                text = choice["message"]["content"]
                truncated = choice.get("finish_reason") == "length"
                return GenerationResponse(
                    text=text,
                    truncated=truncated,
                    meta={"model": body.get("model", self.model)},
                )
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise GenerationError(f"malformed generation response: {exc}") from exc
            except requests.RequestException as exc:
                last_error = exc
                if attempt + 1 < self.max_retries:
                    time.sleep(self.backoff * (2 ** attempt))
        raise TransportError(
            f"generation request failed after {self.max_retries} attempts: {last_error}"
        )


class MockGenerationClient:
    """Deterministic offline stand-in for a generation service.

    The default behavior extracts words from the prompt's transcription
    section and emits a pseudo-summary that depends on (prompt, seed), so
    repeated runs are reproducible and better transcripts yield summaries
    closer to the reference's.
    """

    def __init__(self, fn: Optional[Callable[[GenerationRequest], str]] = None,
                 truncate_at: Optional[int] = None) -> None:
        self.fn = fn
        self.truncate_at = truncate_at
        self.calls: list[GenerationRequest] = []

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        self.calls.append(request)
        if self.fn is not None:
            text = self.fn(request)
        else:
            marker = "Meeting transcription: "
            start = request.prompt.find(marker)
            body = request.prompt[start + len(marker):] if start >= 0 else request.prompt
            words = body.split()
            digest = hashlib.sha256(
                f"{request.seed}:{body}".encode("utf-8")
            ).digest()
            step = 1 + digest[0] % 3
            picked = words[:: step][:80]
            text = " ".join(picked)
        truncated = False
        if self.truncate_at is not None and len(text) > self.truncate_at:
            text = text[: self.truncate_at]
            truncated = True
        return GenerationResponse(text=text, truncated=truncated, meta={"mock": True})


def generate_summaries(
    session_id: str,
    prompt: str,
    seeds: Sequence[int],
    client: GenerationClient,
    *,
    log_path=None,
) -> SummaryBundle:
    """Generate one summary per seed; optionally append a JSONL audit log."""
    if not seeds:
        raise ValueError("need at least one seed")
    summaries = []
    truncated = []
    log_handle = open(log_path, "a", encoding="utf-8") if log_path else None
    try:
        for seed in seeds:
            response = client.generate(GenerationRequest(prompt=prompt, seed=seed))
            summaries.append(response.text)
            truncated.append(response.truncated)
            if log_handle is not None:
                log_handle.write(
                    json.dumps(
                        {
                            "session_id": session_id,
                            "seed": seed,
                            "prompt": prompt,
                            "summary": response.text,
                            "truncated": response.truncated,
                            "meta": dict(response.meta),
                            "timestamp": time.time(),
                        },
                        ensure_ascii=False,
                        sort_keys=True,
                    )
                    + "\n"
                )
    finally:
        if log_handle is not None:
            log_handle.close()
    return SummaryBundle(
        session_id=session_id,
        summaries=tuple(summaries),
        seeds=tuple(seeds),
        truncated=tuple(truncated),
    )
