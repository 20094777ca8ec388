"""Transcript domain model: segments, timed words, and overlap regions.

Ingests line-delimited SegLST records, derives per-word timestamps by
equal division of the owning segment's duration, and classifies reference
segments as overlapped or single-speaker based on where at least two
distinct reference speakers are simultaneously active.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

from .errors import ParseError, SchemaError, ValidationError

__all__ = [
    'Segment',
    'TimedWord',
    'SessionTranscript',
    'OverlapTimeline',
    'REFERENCE',
    'HYPOTHESIS',
    'OVERLAPPED',
    'SINGLE_SPEAKER',
    'parse_seglst',
    'interpolate_word_times',
    'build_overlap_timeline',
    'classify_segment_overlap',
    'speech_time_stats',
]

REFERENCE = 'reference'
HYPOTHESIS = 'hypothesis'

OVERLAPPED = 'overlapped'
SINGLE_SPEAKER = 'single_speaker'

_SEGLST_FIELDS = ('session_id', 'speaker', 'start_time', 'end_time', 'words')


@dataclass(frozen=True)
class Segment:
    """One transcribed utterance with speaker and timing labels.

    ``text`` is the raw, pre-normalization transcript. ``side`` records
    whether the segment came from the reference or the hypothesis file.
    """
    session_id: str
    speaker: str
    start_time: float
    end_time: float
    text: str
    side: str = REFERENCE

    def __post_init__(self):
        if not self.session_id:
            raise ValidationError('segment has empty session_id')
        if not self.speaker:
            raise ValidationError(f'segment in session {self.session_id!r} has empty speaker')
        if self.end_time < self.start_time:
            raise ValidationError(
                f'segment (session={self.session_id!r}, speaker={self.speaker!r}, '
                f'start={self.start_time}, end={self.end_time}) has end_time < start_time'
            )

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time


@dataclass(frozen=True)
class TimedWord:
    """A normalized token with an interpolated time interval.

    ``segment_index`` is the ordinal of the owning segment within the
    session's canonical segment order.
    """
    token: str
    start: float
    end: float
    speaker: str
    segment_index: int


@dataclass(frozen=True)
class SessionTranscript:
    """All segments of one session for one side (reference or hypothesis).

    Segments are kept in canonical order: sorted by start time, ties broken
    by speaker then text.
    """
    session_id: str
    segments: tuple[Segment, ...]
    speakers: frozenset[str] = field(init=False)

    def __post_init__(self):
        for seg in self.segments:
            if seg.session_id != self.session_id:
                raise ValidationError(
                    f'segment session_id {seg.session_id!r} does not match '
                    f'transcript session_id {self.session_id!r}'
                )
        ordered = tuple(sorted(
            self.segments, key=lambda s: (s.start_time, s.speaker, s.text)))
        object.__setattr__(self, 'segments', ordered)
        object.__setattr__(
            self, 'speakers', frozenset(s.speaker for s in ordered))

    def segments_of(self, speaker: str) -> list[Segment]:
        """The speaker's segments in stream (start-time) order."""
        return [s for s in self.segments if s.speaker == speaker]

    @property
    def span(self) -> float:
        """Time span covered by the session's segments (0 if empty)."""
        if not self.segments:
            return 0.0
        return max(s.end_time for s in self.segments) - min(s.start_time for s in self.segments)


@dataclass(frozen=True)
class OverlapTimeline:
    """Disjoint sorted [start, end) intervals with >= 2 active reference speakers."""
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        prev_end = None
        for start, end in self.intervals:
            if end <= start:
                raise ValidationError(f'overlap interval [{start}, {end}) is not positive')
            if prev_end is not None and start < prev_end:
                raise ValidationError('overlap intervals are not disjoint/sorted')
            prev_end = end

    def intersection_duration(self, start: float, end: float) -> float:
        """Total measure of [start, end] covered by the timeline."""
        total = 0.0
        for a, b in self.intervals:
            if a >= end:
                break
            lo = max(a, start)
            hi = min(b, end)
            if hi > lo:
                total += hi - lo
        return total

    def covers_point(self, t: float) -> bool:
        return any(a <= t < b for a, b in self.intervals)


def parse_seglst(source, side: str = REFERENCE) -> list[SessionTranscript]:
    """Parse line-delimited SegLST records into per-session transcripts.

    ``source`` may be bytes, a string, or a readable (text or binary) file
    object. Each line must be a JSON object with the fields ``session_id``,
    ``speaker``, ``start_time``, ``end_time`` and ``words``. Unknown fields
    are ignored. ``side`` tags every segment as reference or hypothesis.
    Returns transcripts sorted by session id; zero-duration segments and
    empty ``words`` are retained.
    """
    if isinstance(source, bytes):
        text = source.decode('utf-8')
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode('utf-8') if isinstance(data, bytes) else data

    by_session: dict[str, list[Segment]] = {}
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f'line {lineno}: not valid JSON: {e.msg}') from e
        if not isinstance(record, dict):
            raise ParseError(f'line {lineno}: expected a JSON object')
        missing = [f for f in _SEGLST_FIELDS if f not in record]
        if missing:
            raise SchemaError(f'line {lineno}: missing field(s) {", ".join(missing)}')
        try:
            start = float(record['start_time'])
            end = float(record['end_time'])
        except (TypeError, ValueError) as e:
            raise SchemaError(f'line {lineno}: start_time/end_time must be numbers') from e
        if not isinstance(record['words'], str):
            raise SchemaError(f'line {lineno}: words must be a string')
        try:
            segment = Segment(
                session_id=str(record['session_id']),
                speaker=str(record['speaker']),
                start_time=start,
                end_time=end,
                text=record['words'],
                side=side,
            )
        except ValidationError as e:
            raise ValidationError(f'line {lineno}: {e}') from e
        by_session.setdefault(segment.session_id, []).append(segment)

    return [
        SessionTranscript(session_id=sid, segments=tuple(segs))
        for sid, segs in sorted(by_session.items())
    ]


def interpolate_word_times(
        segment: Segment,
        tokens: list[str],
        segment_index: int = 0,
) -> list[TimedWord]:
    """Spread ``tokens`` over the segment as equal, contiguous intervals.

    The n tokens partition [start_time, end_time] exactly: the first word
    starts at the segment start, the last ends at the segment end, and
    adjacent words share a boundary. An empty token list gives an empty
    result.
    """
    n = len(tokens)
    if n == 0:
        return []
    start = segment.start_time
    duration = segment.end_time - segment.start_time
    # Boundaries are computed once and shared so that widths telescope to
    # exactly the segment duration.
    boundaries = [start + duration * i / n for i in range(n)]
    boundaries.append(segment.end_time)
    return [
        TimedWord(
            token=tok,
            start=boundaries[i],
            end=boundaries[i + 1],
            speaker=segment.speaker,
            segment_index=segment_index,
        )
        for i, tok in enumerate(tokens)
    ]


def _merge_intervals(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Union of intervals; drops empty ones, merges touching ones."""
    merged: list[list[float]] = []
    for start, end in sorted(intervals):
        if end <= start:
            continue
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [(a, b) for a, b in merged]


def build_overlap_timeline(reference: SessionTranscript) -> OverlapTimeline:
    """Regions where >= 2 distinct reference speakers are active.

    Uses a sweep line over segment boundaries. Same-speaker self-overlap
    does not count; output intervals are merged and disjoint.
    """
    events: list[tuple[float, int, str]] = []
    for seg in reference.segments:
        if seg.end_time > seg.start_time:
            events.append((seg.start_time, 1, seg.speaker))
            events.append((seg.end_time, -1, seg.speaker))
    if not events:
        return OverlapTimeline(intervals=())

    # Process all events at one time point together so zero-length gaps
    # cannot split or create intervals.
    events.sort(key=lambda e: e[0])
    active: dict[str, int] = {}
    raw: list[tuple[float, float]] = []
    region_start = None
    i = 0
    while i < len(events):
        t = events[i][0]
        if region_start is not None:
            raw.append((region_start, t))
            region_start = None
        while i < len(events) and events[i][0] == t:
            _, delta, speaker = events[i]
            count = active.get(speaker, 0) + delta
            if count:
                active[speaker] = count
            else:
                active.pop(speaker, None)
            i += 1
        if len(active) >= 2:
            region_start = t
    return OverlapTimeline(intervals=tuple(_merge_intervals(raw)))


def classify_segment_overlap(segment: Segment, timeline: OverlapTimeline) -> str:
    """``OVERLAPPED`` iff the segment intersects the timeline with positive measure.

    Boundary touching has measure zero and counts as single-speaker.
    """
    if timeline.intersection_duration(segment.start_time, segment.end_time) > 0.0:
        return OVERLAPPED
    return SINGLE_SPEAKER


def speech_time_stats(
        reference: SessionTranscript,
        timeline: OverlapTimeline | None = None,
) -> tuple[float, float]:
    """(total, overlapped) reference speaker-seconds for one session.

    Speaker-seconds count concurrent speakers multiply; each speaker's
    activity is the union of their own segments.
    """
    if timeline is None:
        timeline = build_overlap_timeline(reference)
    total = 0.0
    overlapped = 0.0
    for speaker in sorted(reference.speakers):
        activity = _merge_intervals(
            [(s.start_time, s.end_time) for s in reference.segments_of(speaker)])
        for a, b in activity:
            total += b - a
            overlapped += timeline.intersection_duration(a, b)
    return total, overlapped
