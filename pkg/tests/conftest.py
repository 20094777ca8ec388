"""Shared helpers: random session generation and independent test oracles."""

from __future__ import annotations

import functools
import random

from tcmeval import Segment, SessionTranscript, TimedWord

VOCAB = (
    'yeah', 'okay', 'so', 'the', 'that', 'is', 'we', 'you', 'it', 'think',
    'know', 'right', 'well', 'good', 'just', 'like', 'to', 'and', 'of',
    'what', 'going', 'time', 'one', 'get', 'really', 'mean', 'about',
)

FILLERS = ('uh', 'um', 'hmm', 'mhm')


def random_words(rng: random.Random, n: int, vocab=VOCAB) -> str:
    return ' '.join(rng.choice(vocab) for _ in range(n))


def random_session(
        rng: random.Random,
        session_id: str = 'sess',
        n_speakers: int | None = None,
        overlap: float | None = None,
        n_segments: int | None = None,
        words_range: tuple[int, int] = (2, 6),
) -> SessionTranscript:
    """A synthetic reference session with a controllable overlap fraction.

    ``overlap`` is the probability that a segment starts before the
    previous (other-speaker) segment ends.
    """
    n_speakers = n_speakers if n_speakers is not None else rng.randint(2, 7)
    overlap = overlap if overlap is not None else rng.uniform(0.0, 0.6)
    speakers = [f'spk{i}' for i in range(n_speakers)]
    n_segments = n_segments if n_segments is not None else rng.randint(n_speakers, 3 * n_speakers)

    segments = []
    cursor = 0.0
    prev = None
    for _ in range(n_segments):
        n_words = rng.randint(*words_range)
        duration = round(0.35 * n_words + rng.uniform(0.1, 0.8), 3)
        if prev is not None and rng.random() < overlap:
            speaker = rng.choice([s for s in speakers if s != prev.speaker])
            start = round(rng.uniform(prev.start_time, max(prev.start_time, prev.end_time - 0.05)), 3)
        else:
            speaker = rng.choice(speakers)
            start = round(cursor + rng.uniform(0.05, 0.6), 3)
        seg = Segment(session_id, speaker, start, round(start + duration, 3),
                      random_words(rng, n_words))
        segments.append(seg)
        cursor = max(cursor, seg.end_time)
        prev = seg
    return SessionTranscript(session_id=session_id, segments=tuple(segments))


def perturb_session(
        ref: SessionTranscript,
        rng: random.Random,
        sub: float = 0.12,
        drop: float = 0.12,
        ins: float = 0.08,
        jitter: float = 0.4,
        relabel: bool = True,
        merge_speakers: float = 0.15,
        extra_speaker: float = 0.15,
) -> SessionTranscript:
    """An imperfect hypothesis derived from a reference session."""
    speakers = sorted(ref.speakers)
    if relabel:
        shuffled = speakers[:]
        rng.shuffle(shuffled)
        mapping = {s: f'hyp_{h}' for s, h in zip(speakers, shuffled)}
    else:
        mapping = {s: s for s in speakers}
    if len(speakers) > 1 and rng.random() < merge_speakers:
        a, b = rng.sample(speakers, 2)
        mapping[a] = mapping[b]

    segments = []
    for seg in ref.segments:
        words = []
        for word in seg.text.split():
            r = rng.random()
            if r < drop:
                continue
            if r < drop + sub:
                words.append(rng.choice(VOCAB))
            else:
                words.append(word)
            if rng.random() < ins:
                words.append(rng.choice(VOCAB))
        start = max(0.0, seg.start_time + rng.uniform(-jitter, jitter))
        end = max(start, seg.end_time + rng.uniform(-jitter, jitter))
        segments.append(Segment(
            ref.session_id, mapping[seg.speaker], round(start, 3), round(end, 3),
            ' '.join(words)))
    if rng.random() < extra_speaker:
        start = round(rng.uniform(0.0, 5.0), 3)
        segments.append(Segment(
            ref.session_id, 'hyp_extra', start, round(start + 1.0, 3),
            random_words(rng, rng.randint(1, 3))))
    return SessionTranscript(session_id=ref.session_id, segments=tuple(segments))


def relabel_session(
        transcript: SessionTranscript,
        rng: random.Random,
        prefix: str = 'rl',
) -> SessionTranscript:
    """Apply a random speaker-label bijection."""
    speakers = sorted(transcript.speakers)
    targets = [f'{prefix}_{i}' for i in range(len(speakers))]
    rng.shuffle(targets)
    mapping = dict(zip(speakers, targets))
    return SessionTranscript(
        session_id=transcript.session_id,
        segments=tuple(
            Segment(s.session_id, mapping[s.speaker], s.start_time, s.end_time, s.text)
            for s in transcript.segments),
    )


# --- independent alignment oracles -----------------------------------------

ORACLE_VOCAB = ('a', 'b', 'c', 'd', 'e')


def timed(tokens_with_times, speaker='A'):
    return [TimedWord(tok, start, end, speaker, 0)
            for tok, start, end in tokens_with_times]


def random_timed(rng, n, span=10.0, vocab=ORACLE_VOCAB):
    words = []
    for _ in range(n):
        start = round(rng.uniform(0, span), 3)
        words.append((rng.choice(vocab), start, round(start + rng.uniform(0.1, 1.0), 3)))
    words.sort(key=lambda w: w[1])
    return timed(words)


def oracle_admissible(r, h, collar, symmetric=False):
    pad = collar if symmetric else 0.0
    return (r.start - collar <= h.end + pad) and (h.start - pad <= r.end + collar)


def oracle_min_cost(ref, hyp, collar=None, symmetric=False):
    """Minimum over all admissible monotone alignments (memoized recursion)."""
    @functools.lru_cache(maxsize=None)
    def go(i, j):
        if i == len(ref) and j == len(hyp):
            return 0
        best = len(ref) + len(hyp) + 1
        if i < len(ref):
            best = min(best, 1 + go(i + 1, j))
        if j < len(hyp):
            best = min(best, 1 + go(i, j + 1))
        if i < len(ref) and j < len(hyp):
            if collar is None or oracle_admissible(ref[i], hyp[j], collar, symmetric):
                step = 0 if ref[i].token == hyp[j].token else 1
                best = min(best, step + go(i + 1, j + 1))
        return best

    return go(0, 0)


def enumerate_all_costs(ref, hyp, collar=None, symmetric=False):
    """Literal enumeration of every monotone alignment; small inputs only."""
    costs = []

    def walk(i, j, cost):
        if i == len(ref) and j == len(hyp):
            costs.append(cost)
            return
        if i < len(ref):
            walk(i + 1, j, cost + 1)
        if j < len(hyp):
            walk(i, j + 1, cost + 1)
        if i < len(ref) and j < len(hyp):
            if collar is None or oracle_admissible(ref[i], hyp[j], collar, symmetric):
                walk(i + 1, j + 1, cost + (0 if ref[i].token == hyp[j].token else 1))

    walk(0, 0, 0)
    return costs
