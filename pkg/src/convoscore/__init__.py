"""Scoring and analysis toolkit for long-form multi-speaker transcripts.

The package covers the full evaluation path for speaker-attributed
transcription: segment-list and RTTM/UEM I/O, text normalization,
time-constrained and permutation-invariant word error rates, diarization
error metrics, conversation statistics, microphone-channel utilities, and
summarization-based downstream evaluation.  ``convoscore.cli`` exposes the
same functionality as a command line tool.
"""
from .segments import (
    Segment,
    SegLst,
    UemRegion,
    TranscriptError,
    TranscriptParseError,
    TranscriptSchemaError,
    TranscriptValidationError,
    parse_seglst,
    serialize_seglst,
    load_seglst,
    dump_seglst,
    parse_uem,
    serialize_uem,
    apply_uem,
    parse_rttm,
    serialize_rttm,
)
from .textnorm import NormalizerProfile, available_profiles, get_profile, normalize
from .wer import (
    ErrorCounts,
    SpeakerAssignment,
    WordToken,
    accumulate,
    macro_average,
    interpolate_words,
    tcp_wer,
    cp_wer,
    da_wer,
)
from .diarization import (
    DiarReport,
    SpeakerCountReport,
    evaluate_diarization,
    der,
    jer,
    optimal_mapping,
    speaker_count_report,
)
from .conversation import (
    EVENT_KINDS,
    EventParams,
    TurnEvent,
    OccupancyStats,
    EventKindStats,
    occupancy,
    extract_events,
    event_duration_stats,
)
from .postproc import PostprocParams, condition_segments
from .audio import (
    AudioBuffer,
    SdrConfig,
    SdrStats,
    read_wav,
    ev_rank,
    ev_select,
    projection_sdr,
    channel_sdr_sweep,
    utterance_sdr_stats,
)
from .summarization import (
    PROMPT_TEMPLATE,
    TaggedTranscript,
    SummaryBundle,
    RougeScores,
    BundleScores,
    CorrelationReport,
    GenerationError,
    TransportError,
    GenerationRequest,
    GenerationResponse,
    GenerationClient,
    HttpGenerationClient,
    MockGenerationClient,
    relabel_speakers,
    speaker_numbering,
    render_tagged,
    build_prompt,
    perturb,
    rouge_scores,
    score_bundle_pair,
    evaluate_bundles,
    correlate,
    generate_summaries,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # segments
    "Segment", "SegLst", "UemRegion", "TranscriptError",
    "TranscriptParseError", "TranscriptSchemaError",
    "TranscriptValidationError", "parse_seglst", "serialize_seglst",
    "load_seglst", "dump_seglst", "parse_uem", "serialize_uem", "apply_uem",
    "parse_rttm", "serialize_rttm",
    # textnorm
    "NormalizerProfile", "available_profiles", "get_profile", "normalize",
    # wer
    "ErrorCounts", "SpeakerAssignment", "WordToken", "accumulate",
    "macro_average", "interpolate_words", "tcp_wer", "cp_wer", "da_wer",
    # diarization
    "DiarReport", "SpeakerCountReport", "evaluate_diarization", "der", "jer",
    "optimal_mapping", "speaker_count_report",
    # conversation
    "EVENT_KINDS", "EventParams", "TurnEvent", "OccupancyStats",
    "EventKindStats", "occupancy", "extract_events", "event_duration_stats",
    # postproc
    "PostprocParams", "condition_segments",
    # audio
    "AudioBuffer", "SdrConfig", "SdrStats", "read_wav", "ev_rank",
    "ev_select", "projection_sdr", "channel_sdr_sweep", "utterance_sdr_stats",
    # summarization
    "PROMPT_TEMPLATE", "TaggedTranscript", "SummaryBundle", "RougeScores",
    "BundleScores", "CorrelationReport", "GenerationError", "TransportError",
    "GenerationRequest", "GenerationResponse", "GenerationClient",
    "HttpGenerationClient", "MockGenerationClient", "relabel_speakers",
    "speaker_numbering", "render_tagged", "build_prompt", "perturb",
    "rouge_scores", "score_bundle_pair", "evaluate_bundles", "correlate",
    "generate_summaries",
]
