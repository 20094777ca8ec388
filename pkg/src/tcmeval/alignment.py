"""Word-level alignment and speaker-stream assignment.

Implements the Levenshtein dynamic program, its time-constrained variant
(where a reference and a hypothesis word may only be matched or
substituted if their time intervals, widened by a collar on the reference
side, intersect) and the minimum-cost one-to-one pairing of reference and
hypothesis speaker streams.

Alignments are deterministic: among cost ties, the backtrace prefers
match over substitute over delete over insert at every cell, so downstream
error decompositions are reproducible bit-for-bit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError
from .transcript import TimedWord

__all__ = [
    'MATCH',
    'SUBSTITUTE',
    'DELETE',
    'INSERT',
    'AlignOp',
    'ErrorCounts',
    'Alignment',
    'StreamAssignment',
    'levenshtein_align',
    'time_constrained_align',
    'assign_streams',
    'exhaustive_assignment',
]

MATCH = 'match'
SUBSTITUTE = 'substitute'
DELETE = 'delete'
INSERT = 'insert'


@dataclass(frozen=True)
class AlignOp:
    """One alignment step. Delete carries only a reference index, insert
    only a hypothesis index, match and substitute carry both."""
    kind: str
    ref_index: int | None = None
    hyp_index: int | None = None

    def __post_init__(self):
        if self.kind in (MATCH, SUBSTITUTE):
            ok = self.ref_index is not None and self.hyp_index is not None
        elif self.kind == DELETE:
            ok = self.ref_index is not None and self.hyp_index is None
        elif self.kind == INSERT:
            ok = self.ref_index is None and self.hyp_index is not None
        else:
            ok = False
        if not ok:
            raise ValidationError(f'inconsistent alignment op {self!r}')


@dataclass(frozen=True)
class ErrorCounts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: 'ErrorCounts') -> 'ErrorCounts':
        return ErrorCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
        )


@dataclass(frozen=True)
class Alignment:
    """A monotone alignment path with its error statistics."""
    ops: tuple[AlignOp, ...]
    errors: ErrorCounts
    n_ref: int

    @classmethod
    def all_deletions(cls, n_ref: int) -> 'Alignment':
        return cls(
            ops=tuple(AlignOp(DELETE, ref_index=i) for i in range(n_ref)),
            errors=ErrorCounts(deletions=n_ref),
            n_ref=n_ref,
        )

    @classmethod
    def all_insertions(cls, n_hyp: int) -> 'Alignment':
        return cls(
            ops=tuple(AlignOp(INSERT, hyp_index=j) for j in range(n_hyp)),
            errors=ErrorCounts(insertions=n_hyp),
            n_ref=0,
        )


@dataclass(frozen=True)
class StreamAssignment:
    """One-to-one pairing of reference and hypothesis speakers.

    ``None`` pads the smaller side; ``total_cost`` is the summed pairwise
    alignment error count under this pairing.
    """
    pairs: tuple[tuple[str | None, str | None], ...]
    total_cost: int


def _tokens(words) -> list:
    return [w.token if isinstance(w, TimedWord) else w for w in words]


def _dp_matrix(ref_tokens, hyp_tokens, admissible: np.ndarray | None) -> np.ndarray:
    """Full (n+1) x (m+1) edit-distance table.

    ``admissible[i, j]`` gates the diagonal transition for (ref i, hyp j);
    ``None`` means every pair is admissible. Inadmissible pairs can only be
    expressed as delete + insert.
    """
    n, m = len(ref_tokens), len(hyp_tokens)
    big = n + m + 3
    if n and m:
        eq = (np.array(ref_tokens, dtype=object)[:, None]
              == np.array(hyp_tokens, dtype=object)[None, :])
        subcost = np.where(eq, 0, 1)
        if admissible is not None:
            subcost = np.where(admissible, subcost, big)
    else:
        subcost = np.zeros((n, m), dtype=np.int64)

    dp = np.empty((n + 1, m + 1), dtype=np.int64)
    dp[0] = np.arange(m + 1)
    idx = np.arange(m + 1)
    for i in range(1, n + 1):
        prev = dp[i - 1]
        cand = np.empty(m + 1, dtype=np.int64)
        cand[0] = prev[0] + 1
        if m:
            cand[1:] = np.minimum(prev[:-1] + subcost[i - 1], prev[1:] + 1)
        # Left-to-right insertion propagation:
        # dp[i][j] = min_{k <= j} (cand[k] + (j - k)).
        dp[i] = np.minimum.accumulate(cand - idx) + idx
    return dp


def _backtrace(dp, ref_tokens, hyp_tokens, admissible) -> tuple[AlignOp, ...]:
    """Deterministic path extraction: match > substitute > delete > insert."""
    ops: list[AlignOp] = []
    i, j = len(ref_tokens), len(hyp_tokens)
    while i > 0 or j > 0:
        diag_ok = (
            i > 0 and j > 0
            and (admissible is None or admissible[i - 1, j - 1])
        )
        if diag_ok and ref_tokens[i - 1] == hyp_tokens[j - 1] and dp[i, j] == dp[i - 1, j - 1]:
            ops.append(AlignOp(MATCH, ref_index=i - 1, hyp_index=j - 1))
            i -= 1
            j -= 1
        elif (diag_ok and ref_tokens[i - 1] != hyp_tokens[j - 1]
                and dp[i, j] == dp[i - 1, j - 1] + 1):
            ops.append(AlignOp(SUBSTITUTE, ref_index=i - 1, hyp_index=j - 1))
            i -= 1
            j -= 1
        elif i > 0 and dp[i, j] == dp[i - 1, j] + 1:
            ops.append(AlignOp(DELETE, ref_index=i - 1))
            i -= 1
        else:
            ops.append(AlignOp(INSERT, hyp_index=j - 1))
            j -= 1
    ops.reverse()
    return tuple(ops)


def _count_errors(ops) -> ErrorCounts:
    sub = sum(1 for op in ops if op.kind == SUBSTITUTE)
    dels = sum(1 for op in ops if op.kind == DELETE)
    ins = sum(1 for op in ops if op.kind == INSERT)
    return ErrorCounts(substitutions=sub, deletions=dels, insertions=ins)


def _align(ref_words, hyp_words, admissible) -> Alignment:
    ref_tokens = _tokens(ref_words)
    hyp_tokens = _tokens(hyp_words)
    dp = _dp_matrix(ref_tokens, hyp_tokens, admissible)
    ops = _backtrace(dp, ref_tokens, hyp_tokens, admissible)
    errors = _count_errors(ops)
    assert errors.total == int(dp[-1, -1])
    return Alignment(ops=ops, errors=errors, n_ref=len(ref_tokens))


def levenshtein_align(ref_words, hyp_words) -> Alignment:
    """Minimum-edit-distance alignment with unit substitution/deletion/insertion costs."""
    return _align(ref_words, hyp_words, admissible=None)


def _admissibility(ref_words, hyp_words, collar, symmetric) -> np.ndarray | None:
    if not ref_words or not hyp_words:
        return None
    rs = np.array([w.start for w in ref_words])
    re_ = np.array([w.end for w in ref_words])
    hs = np.array([w.start for w in hyp_words])
    he = np.array([w.end for w in hyp_words])
    pad = collar if symmetric else 0.0
    return (
        (rs[:, None] - collar <= he[None, :] + pad)
        & (hs[None, :] - pad <= re_[:, None] + collar)
    )


def time_constrained_align(
        ref_words: list[TimedWord],
        hyp_words: list[TimedWord],
        collar: float,
        symmetric: bool = False,
) -> Alignment:
    """Levenshtein alignment where temporally distant words cannot pair.

    A reference word r and a hypothesis word h may match or substitute only
    if [r.start - collar, r.end + collar] intersects [h.start, h.end]
    (both sides are widened when ``symmetric`` is set). Everything else is
    as :func:`levenshtein_align`, including the tie-breaking order.
    """
    if collar < 0:
        raise ValidationError(f'collar must be non-negative, got {collar}')
    return _align(ref_words, hyp_words,
                  _admissibility(ref_words, hyp_words, collar, symmetric))


def time_constrained_cost(
        ref_words: list[TimedWord],
        hyp_words: list[TimedWord],
        collar: float,
        symmetric: bool = False,
) -> int:
    """Error count of :func:`time_constrained_align` without the path.

    Memory-light two-row variant used to fill assignment cost matrices.
    """
    if collar < 0:
        raise ValidationError(f'collar must be non-negative, got {collar}')
    return _dp_cost(_tokens(ref_words), _tokens(hyp_words),
                    _admissibility(ref_words, hyp_words, collar, symmetric))


def levenshtein_cost(ref_words, hyp_words) -> int:
    return _dp_cost(_tokens(ref_words), _tokens(hyp_words), None)


def _dp_cost(ref_tokens, hyp_tokens, admissible) -> int:
    n, m = len(ref_tokens), len(hyp_tokens)
    if n == 0:
        return m
    if m == 0:
        return n
    big = n + m + 3
    eq = (np.array(ref_tokens, dtype=object)[:, None]
          == np.array(hyp_tokens, dtype=object)[None, :])
    subcost = np.where(eq, 0, 1)
    if admissible is not None:
        subcost = np.where(admissible, subcost, big)
    prev = np.arange(m + 1)
    idx = np.arange(m + 1)
    cand = np.empty(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        cand[0] = prev[0] + 1
        cand[1:] = np.minimum(prev[:-1] + subcost[i - 1], prev[1:] + 1)
        prev = np.minimum.accumulate(cand - idx) + idx
    return int(prev[-1])


def _pair_key(hyp_speaker: str | None) -> tuple:
    # Real speakers sort before the padding placeholder.
    return (hyp_speaker is None, hyp_speaker or '')


def _cost_matrix(ref_keys, hyp_keys, ref_streams, hyp_streams, pair_cost) -> np.ndarray:
    cost = np.zeros((len(ref_keys), len(hyp_keys)), dtype=np.int64)
    for i, rk in enumerate(ref_keys):
        for j, hk in enumerate(hyp_keys):
            cost[i, j] = pair_cost(
                ref_streams[rk] if rk is not None else None,
                hyp_streams[hk] if hk is not None else None,
            )
    return cost


def assign_streams(ref_streams: dict, hyp_streams: dict, pair_cost) -> StreamAssignment:
    """Minimum-total-cost one-to-one pairing of speaker streams.

    ``pair_cost(ref_stream, hyp_stream)`` must return an integer and accept
    ``None`` for a padded side (costing the full stream as insertions or
    deletions). The smaller side is padded so every speaker is paired.
    Among cost ties the lexicographically lowest pairing is returned:
    reference speakers in sorted order each take the lowest-sorting
    hypothesis partner that still allows an optimal completion.
    """
    ref_keys: list[str | None] = sorted(ref_streams)
    hyp_keys: list[str | None] = sorted(hyp_streams)
    q = max(len(ref_keys), len(hyp_keys))
    if q == 0:
        return StreamAssignment(pairs=(), total_cost=0)
    ref_keys += [None] * (q - len(ref_keys))
    hyp_keys += [None] * (q - len(hyp_keys))

    cost = _cost_matrix(ref_keys, hyp_keys, ref_streams, hyp_streams, pair_cost)
    rows, cols = linear_sum_assignment(cost)
    optimal = int(cost[rows, cols].sum())

    # Canonicalize ties: fix partners greedily in sorted hypothesis order,
    # keeping only choices that still complete at the optimal total.
    chosen: list[int] = []
    remaining = list(range(q))
    fixed_cost = 0
    for i in range(q):
        order = sorted(remaining, key=lambda j: _pair_key(hyp_keys[j]))
        for j in order:
            rest_cols = [c for c in remaining if c != j]
            if rest_cols:
                sub = cost[np.ix_(range(i + 1, q), rest_cols)]
                r2, c2 = linear_sum_assignment(sub)
                completion = int(sub[r2, c2].sum())
            else:
                completion = 0
            if fixed_cost + int(cost[i, j]) + completion == optimal:
                chosen.append(j)
                remaining.remove(j)
                fixed_cost += int(cost[i, j])
                break
        else:  # pragma: no cover - optimal always admits a completion
            raise AssertionError('no optimal completion found')

    pairs = tuple((ref_keys[i], hyp_keys[chosen[i]]) for i in range(q))
    return StreamAssignment(pairs=pairs, total_cost=optimal)


def exhaustive_assignment(ref_streams: dict, hyp_streams: dict, pair_cost) -> StreamAssignment:
    """Brute-force reference for :func:`assign_streams`; test oracle only.

    Enumerates every padded permutation; refuses instances with more than
    8 streams per side.
    """
    if max(len(ref_streams), len(hyp_streams)) > 8:
        raise ValidationError('exhaustive_assignment is limited to 8 streams per side')
    ref_keys: list[str | None] = sorted(ref_streams)
    hyp_keys: list[str | None] = sorted(hyp_streams)
    q = max(len(ref_keys), len(hyp_keys))
    if q == 0:
        return StreamAssignment(pairs=(), total_cost=0)
    ref_keys += [None] * (q - len(ref_keys))
    hyp_keys += [None] * (q - len(hyp_keys))

    best_cost = None
    best_perm = None
    best_perm_key = None
    for perm in itertools.permutations(hyp_keys):
        total = 0
        for rk, hk in zip(ref_keys, perm):
            total += int(pair_cost(
                ref_streams[rk] if rk is not None else None,
                hyp_streams[hk] if hk is not None else None,
            ))
        key = tuple(_pair_key(hk) for hk in perm)
        if best_cost is None or total < best_cost or (total == best_cost and key < best_perm_key):
            best_cost = total
            best_perm = perm
            best_perm_key = key
    pairs = tuple(zip(ref_keys, best_perm))
    return StreamAssignment(pairs=pairs, total_cost=best_cost)
