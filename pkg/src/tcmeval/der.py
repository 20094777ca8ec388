"""Diarization error rate and speaker-count statistics.

DER follows the md-eval convention: no-score zones of one collar width are
placed around every reference segment boundary, speaker activity is
integrated over the remaining timeline (overlapped speech counts
speaker-seconds multiply), the one-to-one reference/hypothesis speaker
mapping maximizing matched speaker-time is chosen exactly, and the rate is
(miss + false alarm + confusion) / scored reference speaker-time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError
from .transcript import SessionTranscript

__all__ = [
    'DerReport',
    'CountStats',
    'der',
    'speaker_count_stats',
]

DEFAULT_DER_COLLAR = 0.25


@dataclass(frozen=True)
class DerReport:
    """Diarization error components for one session, in speaker-seconds.

    ``rate`` is ``None`` when no reference speech remains after collar
    masking.
    """
    session_id: str
    scored_speech: float
    miss: float
    false_alarm: float
    confusion: float
    mapping: tuple[tuple[str, str], ...]
    rate: float | None = field(init=False)

    def __post_init__(self):
        if self.scored_speech > 0:
            rate = (self.miss + self.false_alarm + self.confusion) / self.scored_speech
        else:
            rate = None
        object.__setattr__(self, 'rate', rate)


@dataclass(frozen=True)
class CountStats:
    """Speaker-counting accuracy and mean absolute error over sessions."""
    accuracy: float
    mae: float
    per_session: tuple[tuple[str, int, int], ...]  # (session_id, true, estimated)


def _speaker_activity(transcript: SessionTranscript) -> dict[str, list[tuple[float, float]]]:
    """Per-speaker union of positive-duration segments."""
    activity: dict[str, list[tuple[float, float]]] = {}
    for speaker in sorted(transcript.speakers):
        merged: list[list[float]] = []
        for seg in transcript.segments_of(speaker):
            if seg.end_time <= seg.start_time:
                continue
            if merged and seg.start_time <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], seg.end_time)
            else:
                merged.append([seg.start_time, seg.end_time])
        if merged:
            activity[speaker] = [(a, b) for a, b in merged]
    return activity


def _covers(intervals: list[tuple[float, float]], t: float) -> bool:
    return any(a <= t < b for a, b in intervals)


def der(ref: SessionTranscript, hyp: SessionTranscript,
        collar: float = DEFAULT_DER_COLLAR) -> DerReport:
    """Diarization error rate with a no-score collar around reference boundaries."""
    if ref.session_id != hyp.session_id:
        raise ValidationError(
            f'session mismatch: reference {ref.session_id!r} vs hypothesis {hyp.session_id!r}')
    if collar < 0:
        raise ValidationError(f'collar must be non-negative, got {collar}')

    ref_activity = _speaker_activity(ref)
    hyp_activity = _speaker_activity(hyp)

    mask: list[tuple[float, float]] = []
    for seg in ref.segments:
        for b in (seg.start_time, seg.end_time):
            mask.append((b - collar, b + collar))

    points = set()
    for intervals in (*ref_activity.values(), *hyp_activity.values(), mask):
        for a, b in intervals:
            points.add(a)
            points.add(b)
    boundaries = sorted(points)

    # Piecewise-constant integration over atomic intervals: activity and
    # mask membership cannot change inside one atom.
    atoms = []
    for lo, hi in zip(boundaries, boundaries[1:]):
        if hi <= lo:
            continue
        mid = (lo + hi) / 2
        if collar > 0 and _covers(mask, mid):
            continue
        ref_active = frozenset(s for s, iv in ref_activity.items() if _covers(iv, mid))
        hyp_active = frozenset(s for s, iv in hyp_activity.items() if _covers(iv, mid))
        if ref_active or hyp_active:
            atoms.append((hi - lo, ref_active, hyp_active))

    ref_speakers = sorted(ref_activity)
    hyp_speakers = sorted(hyp_activity)
    mapping: dict[str, str] = {}
    if ref_speakers and hyp_speakers:
        matched = np.zeros((len(ref_speakers), len(hyp_speakers)))
        for duration, ref_active, hyp_active in atoms:
            for i, a in enumerate(ref_speakers):
                if a in ref_active:
                    for j, b in enumerate(hyp_speakers):
                        if b in hyp_active:
                            matched[i, j] += duration
        rows, cols = linear_sum_assignment(-matched)
        mapping = {ref_speakers[i]: hyp_speakers[j] for i, j in zip(rows, cols)}

    scored = miss = fa = conf = 0.0
    for duration, ref_active, hyp_active in atoms:
        n_ref = len(ref_active)
        n_hyp = len(hyp_active)
        n_correct = sum(1 for a in ref_active if mapping.get(a) in hyp_active)
        scored += n_ref * duration
        miss += max(0, n_ref - n_hyp) * duration
        fa += max(0, n_hyp - n_ref) * duration
        conf += (min(n_ref, n_hyp) - n_correct) * duration

    return DerReport(
        session_id=ref.session_id,
        scored_speech=scored,
        miss=miss,
        false_alarm=fa,
        confusion=conf,
        mapping=tuple(sorted(mapping.items())),
    )


def speaker_count_stats(sessions: list[tuple[SessionTranscript, SessionTranscript]]) -> CountStats:
    """Speaker-counting accuracy and MAE over (reference, hypothesis) pairs.

    The estimate counts distinct hypothesis speakers owning at least one
    positive-duration segment; the truth counts the reference's distinct
    speakers.
    """
    if not sessions:
        raise ValidationError('speaker_count_stats requires at least one session')
    per_session = []
    exact = 0
    abs_err = 0
    for ref, hyp in sessions:
        true_count = len(ref.speakers)
        estimated = len({
            seg.speaker for seg in hyp.segments if seg.end_time > seg.start_time})
        per_session.append((ref.session_id, true_count, estimated))
        if true_count == estimated:
            exact += 1
        abs_err += abs(true_count - estimated)
    n = len(sessions)
    return CountStats(
        accuracy=exact / n,
        mae=abs_err / n,
        per_session=tuple(per_session),
    )
