"""Scoring toolkit for long-form multi-speaker ASR.

Metrics: concatenated minimum-permutation WER (cpWER), its
time-constrained variant (tcpWER) with an overlap-aware error
decomposition, the embedding-based semantic error rate (tcpSemER),
diarization error rate (DER), and speaker-count statistics.
"""

from .alignment import (
    Alignment,
    AlignOp,
    ErrorCounts,
    StreamAssignment,
    assign_streams,
    exhaustive_assignment,
    levenshtein_align,
    time_constrained_align,
)
from .der import CountStats, DerReport, der, speaker_count_stats
from .errors import (
    EmbeddingError,
    ParseError,
    SchemaError,
    TcmevalError,
    ValidationError,
)
from .normalize import DEFAULT_FILLERS, NormScheme, normalize
from .report import (
    MetricReport,
    SensitivityRow,
    aggregate,
    error_breakdown,
    score_sessions,
    sensitivity,
    to_table,
)
from .semer import (
    BridgeEmbedder,
    BuiltinEmbedder,
    EmbeddingProvider,
    SemReport,
    UtterancePair,
    builtin_embed,
    derive_pairs,
    sent_sim,
    tcpsemer,
)
from .transcript import (
    OverlapTimeline,
    Segment,
    SessionTranscript,
    TimedWord,
    build_overlap_timeline,
    classify_segment_overlap,
    interpolate_word_times,
    parse_seglst,
)
from .wer import (
    OverlapDecomposition,
    PairAlignment,
    WerReport,
    cpwer,
    decompose_overlap,
    tcpwer,
)

__version__ = '0.1.0'
