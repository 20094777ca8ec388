"""Concatenated minimum-permutation WER, its time-constrained variant, and
the decomposition of time-constrained errors into overlapped vs
single-speaker reference regions.

Both metrics concatenate each speaker's utterances into one stream, find
the speaker pairing that minimizes the total word-level edit distance, and
normalize the summed errors by the reference word count. The
time-constrained variant additionally forbids matching words whose time
intervals are farther apart than a collar, so temporal misalignment counts
as deletion plus insertion (the rate can exceed 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .alignment import (
    DELETE,
    INSERT,
    SUBSTITUTE,
    Alignment,
    ErrorCounts,
    StreamAssignment,
    assign_streams,
    levenshtein_align,
    levenshtein_cost,
    time_constrained_align,
    time_constrained_cost,
)
from .errors import ValidationError
from .normalize import NormScheme, normalize
from .transcript import (
    OVERLAPPED,
    SINGLE_SPEAKER,
    SessionTranscript,
    TimedWord,
    build_overlap_timeline,
    classify_segment_overlap,
    interpolate_word_times,
)

__all__ = [
    'PairAlignment',
    'WerReport',
    'OverlapDecomposition',
    'cpwer',
    'tcpwer',
    'decompose_overlap',
]

DEFAULT_COLLAR = 5.0


@dataclass(frozen=True)
class PairAlignment:
    """Alignment of one assigned stream pair, with the aligned word lists.

    For time-constrained reports the words are :class:`TimedWord` and carry
    segment ownership; speaker ``None`` marks the padded side.
    """
    ref_speaker: str | None
    hyp_speaker: str | None
    ref_words: tuple
    hyp_words: tuple
    alignment: Alignment


@dataclass(frozen=True)
class WerReport:
    """Word-error statistics for one session.

    ``error_rate`` is errors/n_ref; an empty reference with a non-empty
    hypothesis yields the +infinity marker, an empty/empty session yields 0.
    The exact integer counts are authoritative, the rate is derived.
    """
    session_id: str
    n_ref: int
    errors: ErrorCounts
    assignment: StreamAssignment
    alignments: tuple[PairAlignment, ...]
    error_rate: float = field(init=False)

    def __post_init__(self):
        if self.n_ref > 0:
            rate = self.errors.total / self.n_ref
        elif self.errors.total > 0:
            rate = math.inf
        else:
            rate = 0.0
        object.__setattr__(self, 'error_rate', rate)

    @property
    def is_timed(self) -> bool:
        return any(
            isinstance(w, TimedWord)
            for pair in self.alignments
            for w in (*pair.ref_words, *pair.hyp_words)
        )


@dataclass(frozen=True)
class OverlapDecomposition:
    """Time-constrained word errors split by reference region class.

    ``tcpwer_ov + tcpwer_1spk`` equals the overall rate exactly (the
    integer error counts partition); the ``*_norm`` rates divide by the
    region-specific word count instead and isolate per-region difficulty.
    """
    e_ov: int
    e_1spk: int
    n_ref: int
    n_ref_ov: int
    n_ref_1spk: int
    tcpwer_ov: float = field(init=False)
    tcpwer_1spk: float = field(init=False)
    tcpwer_ov_norm: float = field(init=False)
    tcpwer_1spk_norm: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'tcpwer_ov', _rate(self.e_ov, self.n_ref))
        object.__setattr__(self, 'tcpwer_1spk', _rate(self.e_1spk, self.n_ref))
        object.__setattr__(self, 'tcpwer_ov_norm', _rate(self.e_ov, self.n_ref_ov))
        object.__setattr__(self, 'tcpwer_1spk_norm', _rate(self.e_1spk, self.n_ref_1spk))


def _rate(errors: int, n: int) -> float:
    if n > 0:
        return errors / n
    return math.inf if errors > 0 else 0.0


def _token_streams(transcript: SessionTranscript, scheme: NormScheme) -> dict[str, list[str]]:
    streams: dict[str, list[str]] = {spk: [] for spk in sorted(transcript.speakers)}
    for seg in transcript.segments:
        streams[seg.speaker].extend(normalize(seg.text, scheme))
    return streams


def _timed_streams(
        transcript: SessionTranscript, scheme: NormScheme,
) -> dict[str, list[TimedWord]]:
    streams: dict[str, list[TimedWord]] = {spk: [] for spk in sorted(transcript.speakers)}
    for index, seg in enumerate(transcript.segments):
        tokens = normalize(seg.text, scheme)
        streams[seg.speaker].extend(interpolate_word_times(seg, tokens, segment_index=index))
    return streams


def _pair_alignments(assignment: StreamAssignment, ref_streams, hyp_streams,
                     align_pair) -> tuple[PairAlignment, ...]:
    pairs = []
    for ref_spk, hyp_spk in assignment.pairs:
        ref_words = tuple(ref_streams[ref_spk]) if ref_spk is not None else ()
        hyp_words = tuple(hyp_streams[hyp_spk]) if hyp_spk is not None else ()
        if ref_spk is None:
            alignment = Alignment.all_insertions(len(hyp_words))
        elif hyp_spk is None:
            alignment = Alignment.all_deletions(len(ref_words))
        else:
            alignment = align_pair(list(ref_words), list(hyp_words))
        pairs.append(PairAlignment(
            ref_speaker=ref_spk, hyp_speaker=hyp_spk,
            ref_words=ref_words, hyp_words=hyp_words, alignment=alignment))
    return tuple(pairs)


def _score(session_id, ref_streams, hyp_streams, pair_cost, align_pair) -> WerReport:
    assignment = assign_streams(ref_streams, hyp_streams, pair_cost)
    alignments = _pair_alignments(assignment, ref_streams, hyp_streams, align_pair)
    errors = ErrorCounts()
    for pair in alignments:
        errors = errors + pair.alignment.errors
    assert errors.total == assignment.total_cost, (errors, assignment.total_cost)
    n_ref = sum(len(words) for words in ref_streams.values())
    return WerReport(
        session_id=session_id, n_ref=n_ref, errors=errors,
        assignment=assignment, alignments=alignments)


def _check_sessions(ref: SessionTranscript, hyp: SessionTranscript):
    if ref.session_id != hyp.session_id:
        raise ValidationError(
            f'session mismatch: reference {ref.session_id!r} vs hypothesis {hyp.session_id!r}')


def cpwer(ref: SessionTranscript, hyp: SessionTranscript,
          scheme: NormScheme | None = None) -> WerReport:
    """Concatenated minimum-permutation WER for one session."""
    _check_sessions(ref, hyp)
    scheme = scheme or NormScheme.verbatim()
    ref_streams = _token_streams(ref, scheme)
    hyp_streams = _token_streams(hyp, scheme)

    def pair_cost(r, h):
        if r is None:
            return len(h)
        if h is None:
            return len(r)
        return levenshtein_cost(r, h)

    return _score(ref.session_id, ref_streams, hyp_streams, pair_cost, levenshtein_align)


def tcpwer(ref: SessionTranscript, hyp: SessionTranscript,
           collar: float = DEFAULT_COLLAR, scheme: NormScheme | None = None,
           symmetric_collar: bool = False) -> WerReport:
    """Time-constrained minimum-permutation WER for one session.

    Word times are interpolated by equal division of each segment's
    duration. The collar widens the reference word interval (both
    intervals when ``symmetric_collar`` is set) before the intersection
    test that gates match/substitute transitions.
    """
    _check_sessions(ref, hyp)
    if collar < 0:
        raise ValidationError(f'collar must be non-negative, got {collar}')
    scheme = scheme or NormScheme.verbatim()
    ref_streams = _timed_streams(ref, scheme)
    hyp_streams = _timed_streams(hyp, scheme)

    def pair_cost(r, h):
        if r is None:
            return len(h)
        if h is None:
            return len(r)
        return time_constrained_cost(r, h, collar, symmetric_collar)

    def align_pair(r, h):
        return time_constrained_align(r, h, collar, symmetric_collar)

    return _score(ref.session_id, ref_streams, hyp_streams, pair_cost, align_pair)


def _insert_class(pair: PairAlignment, op_index: int, seg_class, timeline) -> str:
    """Region class of one insertion error.

    If the insert sits between two ops owned by the same reference segment
    it inherits that segment's class; otherwise the hypothesis word's
    midpoint decides against the overlap timeline (outside all reference
    speech counts as single-speaker).
    """
    ops = pair.alignment.ops
    prev_seg = next_seg = None
    for k in range(op_index - 1, -1, -1):
        if ops[k].ref_index is not None:
            prev_seg = pair.ref_words[ops[k].ref_index].segment_index
            break
    for k in range(op_index + 1, len(ops)):
        if ops[k].ref_index is not None:
            next_seg = pair.ref_words[ops[k].ref_index].segment_index
            break
    if prev_seg is not None and prev_seg == next_seg:
        return seg_class[prev_seg]
    word = pair.hyp_words[ops[op_index].hyp_index]
    midpoint = (word.start + word.end) / 2
    return OVERLAPPED if timeline.covers_point(midpoint) else SINGLE_SPEAKER


def decompose_overlap(report: WerReport, ref: SessionTranscript) -> OverlapDecomposition:
    """Attribute every time-constrained word error to a reference region class.

    Substitution and deletion errors take the class of the reference
    segment owning their reference word; insertions follow the rule in
    :func:`_insert_class`. Reference word counts are split the same way, so
    both the error counts and the word counts partition exactly.
    """
    if not report.alignments and report.n_ref > 0:
        raise ValidationError('report carries no alignments')
    if not report.is_timed and (report.n_ref > 0 or report.errors.total > 0):
        raise ValidationError('overlap decomposition requires a time-constrained report')

    timeline = build_overlap_timeline(ref)
    seg_class = [classify_segment_overlap(seg, timeline) for seg in ref.segments]

    n_ov = n_1spk = 0
    e_ov = e_1spk = 0
    for pair in report.alignments:
        for word in pair.ref_words:
            if seg_class[word.segment_index] == OVERLAPPED:
                n_ov += 1
            else:
                n_1spk += 1
        for op_index, op in enumerate(pair.alignment.ops):
            if op.kind in (SUBSTITUTE, DELETE):
                cls = seg_class[pair.ref_words[op.ref_index].segment_index]
            elif op.kind == INSERT:
                cls = _insert_class(pair, op_index, seg_class, timeline)
            else:
                continue
            if cls == OVERLAPPED:
                e_ov += 1
            else:
                e_1spk += 1

    assert n_ov + n_1spk == report.n_ref
    assert e_ov + e_1spk == report.errors.total
    return OverlapDecomposition(
        e_ov=e_ov, e_1spk=e_1spk, n_ref=report.n_ref,
        n_ref_ov=n_ov, n_ref_1spk=n_1spk)
