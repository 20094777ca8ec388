"""Semantic error rate over the time-constrained alignment.

The word-level alignment is partitioned into utterance-level pairs: each
reference segment is paired with the hypothesis words aligned to it (or
with nothing if entirely deleted), and leftover hypothesis material forms
insertion-only pairs. Each two-sided pair is scored by
``(1 - cosine(sentence embeddings)) * |R|``, one-sided pairs by the full
word count of the present side, and the summed pair errors are normalized
by the reference word count.

A hermetic hashed bag-of-words embedder is built in; a remote provider
speaking the embed-bridge HTTP protocol can be used instead.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .alignment import INSERT
from .errors import EmbeddingError, ValidationError
from .normalize import NormScheme
from .transcript import SessionTranscript
from .wer import DEFAULT_COLLAR, WerReport, tcpwer

__all__ = [
    'UtterancePair',
    'SemReport',
    'EmbeddingProvider',
    'BuiltinEmbedder',
    'BridgeEmbedder',
    'builtin_embed',
    'sent_sim',
    'derive_pairs',
    'score_pairs',
    'tcpsemer',
]

BUILTIN_DIMENSION = 256

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class UtterancePair:
    """One utterance-level (reference, hypothesis) pair.

    One-sided pairs have a fixed semantic error (the word count of the
    present side); two-sided pairs carry ``sem_err = (1 - sim) * |R|`` once
    a similarity has been assigned (``sim`` is ``None`` until scored).
    """
    ref_tokens: tuple[str, ...]
    hyp_tokens: tuple[str, ...]
    sim: float | None = None
    ref_len: int = field(init=False)
    hyp_len: int = field(init=False)
    sem_err: float | None = field(init=False)

    def __post_init__(self):
        if not self.ref_tokens and not self.hyp_tokens:
            raise ValidationError('utterance pair with both sides empty')
        object.__setattr__(self, 'ref_len', len(self.ref_tokens))
        object.__setattr__(self, 'hyp_len', len(self.hyp_tokens))
        if not self.ref_tokens:
            sem_err = float(self.hyp_len)
        elif not self.hyp_tokens:
            sem_err = float(self.ref_len)
        elif self.sim is not None:
            sem_err = (1.0 - self.sim) * self.ref_len
        else:
            sem_err = None
        object.__setattr__(self, 'sem_err', sem_err)

    @property
    def two_sided(self) -> bool:
        return bool(self.ref_tokens) and bool(self.hyp_tokens)

    @property
    def ref_text(self) -> str:
        return ' '.join(self.ref_tokens)

    @property
    def hyp_text(self) -> str:
        return ' '.join(self.hyp_tokens)


@dataclass(frozen=True)
class SemReport:
    """Semantic error statistics for one session."""
    session_id: str
    n_ref: int
    total_sem_err: float
    pairs: tuple[UtterancePair, ...]
    rate: float = field(init=False)

    def __post_init__(self):
        if self.n_ref > 0:
            rate = self.total_sem_err / self.n_ref
        elif self.total_sem_err > 0:
            rate = math.inf
        else:
            rate = 0.0
        object.__setattr__(self, 'rate', rate)


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


def builtin_embed(tokens: list[str]) -> np.ndarray:
    """Hashed bag-of-words embedding: FNV-1a bucket counts, L2-normalized.

    Order-insensitive by construction; an empty token list gives the zero
    vector.
    """
    vec = np.zeros(BUILTIN_DIMENSION)
    for token in tokens:
        vec[_fnv1a64(token.encode('utf-8')) % BUILTIN_DIMENSION] += 1.0
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def sent_sim(a: np.ndarray, b: np.ndarray, clamp: bool = True) -> float:
    """Cosine similarity, clamped to [0, 1] unless ``clamp`` is disabled.

    Either vector being all-zero gives 0. Raises on dimension mismatch.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError(f'embedding dimension mismatch: {a.shape} vs {b.shape}')
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    cos = float(np.dot(a, b) / (norm_a * norm_b))
    if clamp:
        return min(1.0, max(0.0, cos))
    return cos


class EmbeddingProvider:
    """Deterministic text-to-vector provider with a content-addressed cache."""

    name: str = 'base'
    dimension: int = 0

    def __init__(self):
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def embed_many(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]

    def embed_cached(self, texts: list[str]) -> list[np.ndarray]:
        """Embed ``texts``, fetching only cache misses from the provider."""
        with self._lock:
            missing = sorted({t for t in texts if t not in self._cache})
        if missing:
            vectors = self.embed_many(missing)
            with self._lock:
                for text, vec in zip(missing, vectors):
                    self._cache[text] = vec
        with self._lock:
            return [self._cache[t] for t in texts]


class BuiltinEmbedder(EmbeddingProvider):
    """Hermetic hashed bag-of-words provider (no model, no network)."""

    name = 'builtin'
    dimension = BUILTIN_DIMENSION

    def embed(self, text: str) -> np.ndarray:
        return builtin_embed(text.split())


class BridgeEmbedder(EmbeddingProvider):
    """Client for the embed-bridge HTTP protocol.

    Checks ``GET /health`` on construction to learn the hosted model name
    and dimension, then batches ``POST /embed`` requests.
    """

    max_batch = 256

    def __init__(self, url: str, timeout: float = 60.0):
        super().__init__()
        import requests

        self._requests = requests
        self._url = url.rstrip('/')
        self._timeout = timeout
        try:
            response = requests.get(f'{self._url}/health', timeout=timeout)
            response.raise_for_status()
            health = response.json()
            self.name = health['model']
            self.dimension = int(health['dimension'])
        except Exception as e:
            raise EmbeddingError(f'embed bridge health check failed at {url}: {e}') from e

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: list[str]) -> list[np.ndarray]:
        vectors: list[np.ndarray] = []
        for lo in range(0, len(texts), self.max_batch):
            batch = texts[lo:lo + self.max_batch]
            try:
                response = self._requests.post(
                    f'{self._url}/embed', json={'texts': batch}, timeout=self._timeout)
                response.raise_for_status()
                payload = response.json()
            except Exception as e:
                raise EmbeddingError(f'embed bridge request failed: {e}') from e
            embeddings = payload.get('embeddings')
            if not isinstance(embeddings, list) or len(embeddings) != len(batch):
                raise EmbeddingError(
                    f'embed bridge returned {len(embeddings or [])} vectors for {len(batch)} texts')
            for vec in embeddings:
                arr = np.asarray(vec, dtype=float)
                if arr.shape != (self.dimension,):
                    raise EmbeddingError(
                        f'embed bridge returned a vector of shape {arr.shape}, '
                        f'expected ({self.dimension},)')
                vectors.append(arr)
        return vectors


def derive_pairs(report: WerReport, ref: SessionTranscript) -> list[UtterancePair]:
    """Partition a time-constrained alignment into utterance-level pairs.

    Within each assigned stream pair, every insertion run attaches to the
    reference segment of the next reference-carrying op (this covers
    leading and inside-segment inserts and sends boundary inserts to the
    following segment); trailing inserts form one insertion-only pair. A
    reference segment whose words are all deleted and that attracted no
    inserts yields a deletion-only pair. A hypothesis stream without a
    reference counterpart yields one insertion-only pair per hypothesis
    segment. Two-sided pairs are returned unscored (``sim`` is ``None``).
    """
    if not report.alignments and report.n_ref > 0:
        raise ValidationError('report carries no alignments')
    if not report.is_timed and (report.n_ref > 0 or report.errors.total > 0):
        raise ValidationError('pair derivation requires a time-constrained report')

    pairs: list[UtterancePair] = []
    for pair in report.alignments:
        if pair.ref_speaker is None:
            # Unmatched hypothesis stream: one pair per hypothesis segment.
            for _, group in itertools.groupby(pair.hyp_words, key=lambda w: w.segment_index):
                tokens = tuple(w.token for w in group)
                if tokens:
                    pairs.append(UtterancePair(ref_tokens=(), hyp_tokens=tokens))
            continue

        seg_hyp: dict[int, list[int]] = {}
        seg_order: list[int] = []
        pending: list[int] = []
        for op in pair.alignment.ops:
            if op.kind == INSERT:
                pending.append(op.hyp_index)
                continue
            seg = pair.ref_words[op.ref_index].segment_index
            if seg not in seg_hyp:
                seg_hyp[seg] = []
                seg_order.append(seg)
            if pending:
                seg_hyp[seg].extend(pending)
                pending = []
            if op.hyp_index is not None:
                seg_hyp[seg].append(op.hyp_index)

        ref_by_seg: dict[int, list[str]] = {}
        for word in pair.ref_words:
            ref_by_seg.setdefault(word.segment_index, []).append(word.token)
        for seg in seg_order:
            pairs.append(UtterancePair(
                ref_tokens=tuple(ref_by_seg[seg]),
                hyp_tokens=tuple(pair.hyp_words[j].token for j in seg_hyp[seg]),
            ))
        if pending:
            pairs.append(UtterancePair(
                ref_tokens=(),
                hyp_tokens=tuple(pair.hyp_words[j].token for j in pending),
            ))
    return pairs


def score_pairs(
        pairs: list[UtterancePair],
        provider: EmbeddingProvider,
        clamp: bool = True,
) -> list[UtterancePair]:
    """Fill in similarity scores for the two-sided pairs."""
    texts: list[str] = []
    first_pair_of_text: dict[str, int] = {}
    for index, pair in enumerate(pairs):
        if pair.two_sided:
            for text in (pair.ref_text, pair.hyp_text):
                texts.append(text)
                first_pair_of_text.setdefault(text, index)
    try:
        vectors = provider.embed_cached(texts)
    except EmbeddingError:
        raise
    except Exception as e:
        first = min(first_pair_of_text.values(), default=0)
        raise EmbeddingError(f'embedding provider failed at pair {first}: {e}') from e
    by_text = dict(zip(texts, vectors))

    scored: list[UtterancePair] = []
    for index, pair in enumerate(pairs):
        if not pair.two_sided:
            scored.append(pair)
            continue
        try:
            sim = sent_sim(by_text[pair.ref_text], by_text[pair.hyp_text], clamp=clamp)
        except ValidationError as e:
            raise EmbeddingError(f'similarity failed at pair {index}: {e}') from e
        scored.append(UtterancePair(
            ref_tokens=pair.ref_tokens, hyp_tokens=pair.hyp_tokens, sim=sim))
    return scored


def tcpsemer(
        ref: SessionTranscript,
        hyp: SessionTranscript,
        collar: float = DEFAULT_COLLAR,
        scheme: NormScheme | None = None,
        provider: EmbeddingProvider | None = None,
        symmetric_collar: bool = False,
        clamp: bool = True,
) -> SemReport:
    """Time-constrained minimum-permutation semantic error rate for one session."""
    provider = provider or BuiltinEmbedder()
    report = tcpwer(ref, hyp, collar=collar, scheme=scheme,
                    symmetric_collar=symmetric_collar)
    pairs = score_pairs(derive_pairs(report, ref), provider, clamp=clamp)
    total = sum(p.sem_err for p in pairs)
    return SemReport(
        session_id=ref.session_id,
        n_ref=report.n_ref,
        total_sem_err=total,
        pairs=tuple(pairs),
    )
