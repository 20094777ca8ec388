"""Session scoring, micro-aggregation, sensitivity analysis, and
serialization of metric reports.

Aggregate rates are micro-averages: summed error quantities over summed
reference quantities, never a mean of per-session rates. Sessions on which
a metric is undefined (empty reference, fully masked timeline) are
excluded from that metric's aggregate and listed in the config echo.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

from .der import DEFAULT_DER_COLLAR, DerReport, der, speaker_count_stats
from .errors import ValidationError
from .normalize import NormScheme
from .semer import BuiltinEmbedder, EmbeddingProvider, SemReport, tcpsemer
from .transcript import (
    SessionTranscript,
    build_overlap_timeline,
    speech_time_stats,
)
from .wer import (
    DEFAULT_COLLAR,
    OverlapDecomposition,
    WerReport,
    cpwer,
    decompose_overlap,
    tcpwer,
)

__all__ = [
    'MetricReport',
    'SensitivityRow',
    'ALL_METRICS',
    'score_sessions',
    'aggregate',
    'sensitivity',
    'error_breakdown',
    'to_table',
]

ALL_METRICS = ('cpwer', 'tcpwer', 'decomposition', 'tcpsemer', 'der', 'counts')


@dataclass(frozen=True)
class MetricReport:
    """Per-session and micro-aggregated metrics, plus the knob echo.

    All payloads are JSON-native values so serialization round-trips to an
    equal report.
    """
    per_session: dict
    aggregate: dict
    config_echo: dict

    def to_dict(self) -> dict:
        return {
            'per_session': self.per_session,
            'aggregate': self.aggregate,
            'config_echo': self.config_echo,
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'MetricReport':
        return cls(
            per_session=d['per_session'],
            aggregate=d['aggregate'],
            config_echo=d['config_echo'],
        )

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'MetricReport':
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SensitivityRow:
    """Relative metric change between two normalization schemes."""
    metric: str
    per_system_rel_change: tuple[float, ...]
    mean: float
    std: float


def _pct(rate) -> str | None:
    if rate is None:
        return None
    if math.isinf(rate):
        return 'inf'
    return f'{rate * 100:.2f}'


def _wer_summary(report: WerReport) -> dict:
    return {
        'n_ref': report.n_ref,
        'substitutions': report.errors.substitutions,
        'deletions': report.errors.deletions,
        'insertions': report.errors.insertions,
        'errors': report.errors.total,
        'error_rate': report.error_rate,
        'error_rate_pct': _pct(report.error_rate),
        'assignment': [list(p) for p in report.assignment.pairs],
    }


def _decomposition_summary(d: OverlapDecomposition) -> dict:
    return {
        'e_ov': d.e_ov,
        'e_1spk': d.e_1spk,
        'n_ref': d.n_ref,
        'n_ref_ov': d.n_ref_ov,
        'n_ref_1spk': d.n_ref_1spk,
        'tcpwer_ov': d.tcpwer_ov,
        'tcpwer_1spk': d.tcpwer_1spk,
        'tcpwer_ov_norm': d.tcpwer_ov_norm,
        'tcpwer_1spk_norm': d.tcpwer_1spk_norm,
        'tcpwer_ov_pct': _pct(d.tcpwer_ov),
        'tcpwer_1spk_pct': _pct(d.tcpwer_1spk),
    }


def _sem_summary(report: SemReport) -> dict:
    return {
        'n_ref': report.n_ref,
        'total_sem_err': report.total_sem_err,
        'rate': report.rate,
        'rate_pct': _pct(report.rate),
        'num_pairs': len(report.pairs),
    }


def _der_summary(report: DerReport) -> dict:
    return {
        'scored_speech': report.scored_speech,
        'miss': report.miss,
        'false_alarm': report.false_alarm,
        'confusion': report.confusion,
        'rate': report.rate,
        'rate_pct': _pct(report.rate),
        'mapping': [list(p) for p in report.mapping],
    }


def _empty_like(session_id: str) -> SessionTranscript:
    return SessionTranscript(session_id=session_id, segments=())


def score_sessions(
        ref_sessions: list[SessionTranscript],
        hyp_sessions: list[SessionTranscript],
        metrics=ALL_METRICS,
        collar: float = DEFAULT_COLLAR,
        der_collar: float = DEFAULT_DER_COLLAR,
        scheme: NormScheme | None = None,
        provider: EmbeddingProvider | None = None,
        symmetric_collar: bool = False,
        clamp: bool = True,
) -> MetricReport:
    """Score every reference session and assemble the full report.

    A reference session without a hypothesis is scored against an empty
    hypothesis; a hypothesis session without a reference is an error.
    """
    scheme = scheme or NormScheme.verbatim()
    provider = provider or BuiltinEmbedder()
    ref_by_id = {t.session_id: t for t in ref_sessions}
    hyp_by_id = {t.session_id: t for t in hyp_sessions}
    unknown = sorted(set(hyp_by_id) - set(ref_by_id))
    if unknown:
        raise ValidationError(
            f'hypothesis contains session(s) with no reference: {", ".join(unknown)}')

    per_session: dict = {}
    count_pairs = []
    for sid in sorted(ref_by_id):
        ref = ref_by_id[sid]
        hyp = hyp_by_id.get(sid) or _empty_like(sid)
        timeline = build_overlap_timeline(ref)
        total_time, overlapped_time = speech_time_stats(ref, timeline)
        entry: dict = {
            'session_stats': {
                'ref_speaker_count': len(ref.speakers),
                'ref_speech_time': total_time,
                'overlapped_speech_time': overlapped_time,
            },
        }
        tcp_report = None
        if 'cpwer' in metrics:
            entry['cpwer'] = _wer_summary(cpwer(ref, hyp, scheme=scheme))
        if 'tcpwer' in metrics or 'decomposition' in metrics:
            tcp_report = tcpwer(ref, hyp, collar=collar, scheme=scheme,
                                symmetric_collar=symmetric_collar)
            entry['tcpwer'] = _wer_summary(tcp_report)
        if 'decomposition' in metrics:
            entry['decomposition'] = _decomposition_summary(
                decompose_overlap(tcp_report, ref))
        if 'tcpsemer' in metrics:
            entry['tcpsemer'] = _sem_summary(tcpsemer(
                ref, hyp, collar=collar, scheme=scheme, provider=provider,
                symmetric_collar=symmetric_collar, clamp=clamp))
        if 'der' in metrics:
            entry['der'] = _der_summary(der(ref, hyp, collar=der_collar))
        if 'counts' in metrics:
            count_pairs.append((ref, hyp))
        per_session[sid] = entry

    if count_pairs:
        stats = speaker_count_stats(count_pairs)
        for sid, true_count, estimated in stats.per_session:
            per_session[sid]['counts'] = {'true': true_count, 'estimated': estimated}

    config_echo = {
        'normalizer': scheme.name,
        'filler_lexicon': sorted(scheme.filler_lexicon),
        'collar': collar,
        'der_collar': der_collar,
        'embedder': provider.name,
        'symmetric_collar': symmetric_collar,
        'clamp_similarity': clamp,
        'insertion_attribution': 'same-segment-else-hyp-midpoint',
        'boundary_insert_attachment': 'following-segment',
        'aggregation': 'micro',
    }
    return aggregate(per_session, config_echo=config_echo)


def aggregate(per_session: dict, config_echo: dict | None = None) -> MetricReport:
    """Micro-aggregate per-session metric summaries into a full report.

    Error quantities are summed before any division; sessions where a
    metric is undefined are excluded from that metric and listed under
    ``config_echo['excluded']``.
    """
    if not per_session:
        raise ValidationError('aggregate requires at least one session')
    agg: dict = {}
    excluded: dict = {}

    for metric in ('cpwer', 'tcpwer'):
        entries = {sid: e[metric] for sid, e in per_session.items() if metric in e}
        if not entries:
            continue
        usable = {sid: e for sid, e in entries.items() if e['n_ref'] > 0}
        excluded[metric] = sorted(set(entries) - set(usable))
        n_ref = sum(e['n_ref'] for e in usable.values())
        subs = sum(e['substitutions'] for e in usable.values())
        dels = sum(e['deletions'] for e in usable.values())
        ins = sum(e['insertions'] for e in usable.values())
        rate = (subs + dels + ins) / n_ref if n_ref else 0.0
        agg[metric] = {
            'n_ref': n_ref,
            'substitutions': subs,
            'deletions': dels,
            'insertions': ins,
            'errors': subs + dels + ins,
            'error_rate': rate,
            'error_rate_pct': _pct(rate),
            'n_sessions': len(usable),
        }

    entries = {sid: e['decomposition'] for sid, e in per_session.items()
               if 'decomposition' in e}
    if entries:
        usable = {sid: e for sid, e in entries.items() if e['n_ref'] > 0}
        excluded['decomposition'] = sorted(set(entries) - set(usable))
        d = OverlapDecomposition(
            e_ov=sum(e['e_ov'] for e in usable.values()),
            e_1spk=sum(e['e_1spk'] for e in usable.values()),
            n_ref=sum(e['n_ref'] for e in usable.values()),
            n_ref_ov=sum(e['n_ref_ov'] for e in usable.values()),
            n_ref_1spk=sum(e['n_ref_1spk'] for e in usable.values()),
        )
        agg['decomposition'] = _decomposition_summary(d)
        agg['decomposition']['n_sessions'] = len(usable)

    entries = {sid: e['tcpsemer'] for sid, e in per_session.items() if 'tcpsemer' in e}
    if entries:
        usable = {sid: e for sid, e in entries.items() if e['n_ref'] > 0}
        excluded['tcpsemer'] = sorted(set(entries) - set(usable))
        n_ref = sum(e['n_ref'] for e in usable.values())
        total = sum(e['total_sem_err'] for e in usable.values())
        rate = total / n_ref if n_ref else 0.0
        agg['tcpsemer'] = {
            'n_ref': n_ref,
            'total_sem_err': total,
            'rate': rate,
            'rate_pct': _pct(rate),
            'n_sessions': len(usable),
        }

    entries = {sid: e['der'] for sid, e in per_session.items() if 'der' in e}
    if entries:
        usable = {sid: e for sid, e in entries.items() if e['scored_speech'] > 0}
        excluded['der'] = sorted(set(entries) - set(usable))
        scored = sum(e['scored_speech'] for e in usable.values())
        miss = sum(e['miss'] for e in usable.values())
        fa = sum(e['false_alarm'] for e in usable.values())
        conf = sum(e['confusion'] for e in usable.values())
        rate = (miss + fa + conf) / scored if scored else None
        agg['der'] = {
            'scored_speech': scored,
            'miss': miss,
            'false_alarm': fa,
            'confusion': conf,
            'rate': rate,
            'rate_pct': _pct(rate),
            'n_sessions': len(usable),
        }

    entries = {sid: e['counts'] for sid, e in per_session.items() if 'counts' in e}
    if entries:
        n = len(entries)
        exact = sum(1 for e in entries.values() if e['true'] == e['estimated'])
        abs_err = sum(abs(e['true'] - e['estimated']) for e in entries.values())
        agg['counts'] = {
            'accuracy': exact / n,
            'mae': abs_err / n,
            'n_sessions': n,
        }

    echo = dict(config_echo or {})
    echo['excluded'] = {k: v for k, v in excluded.items() if v}
    return MetricReport(per_session=per_session, aggregate=agg, config_echo=echo)


_COMPARABLE_KNOBS = (
    'collar', 'der_collar', 'embedder', 'symmetric_collar', 'clamp_similarity',
    'insertion_attribution', 'boundary_insert_attachment', 'aggregation',
)


def _check_comparable(report_a: MetricReport, report_b: MetricReport, label: str):
    for knob in _COMPARABLE_KNOBS:
        a = report_a.config_echo.get(knob)
        b = report_b.config_echo.get(knob)
        if a != b:
            raise ValidationError(
                f'{label}: config knob {knob!r} differs ({a!r} vs {b!r}); '
                f'reports are not comparable')


def sensitivity(
        reports_a: list[MetricReport],
        reports_b: list[MetricReport],
        metrics=('tcpwer', 'tcpsemer'),
) -> list[SensitivityRow]:
    """Relative metric change per system between two normalization schemes.

    ``reports_a`` and ``reports_b`` are parallel lists (same systems, same
    order) scored under scheme A and scheme B. Systems with a zero baseline
    are excluded with a warning. The std is the sample standard deviation.
    """
    if len(reports_a) != len(reports_b):
        raise ValidationError(
            f'system sets differ: {len(reports_a)} reports under scheme A '
            f'vs {len(reports_b)} under scheme B')
    if not reports_a:
        raise ValidationError('sensitivity requires at least one system')
    for i, (ra, rb) in enumerate(zip(reports_a, reports_b)):
        _check_comparable(ra, rb, f'system {i}')

    rows = []
    for metric in metrics:
        key = 'error_rate' if metric in ('cpwer', 'tcpwer') else 'rate'
        changes = []
        for i, (ra, rb) in enumerate(zip(reports_a, reports_b)):
            if metric not in ra.aggregate or metric not in rb.aggregate:
                continue
            base = ra.aggregate[metric][key]
            new = rb.aggregate[metric][key]
            if not base:
                warnings.warn(
                    f'system {i}: zero {metric} baseline, excluded from sensitivity')
                continue
            changes.append((new - base) / base)
        mean = sum(changes) / len(changes) if changes else 0.0
        if len(changes) > 1:
            var = sum((c - mean) ** 2 for c in changes) / (len(changes) - 1)
            std = math.sqrt(var)
        else:
            std = 0.0
        rows.append(SensitivityRow(
            metric=metric,
            per_system_rel_change=tuple(changes),
            mean=mean,
            std=std,
        ))
    return rows


def error_breakdown(report: MetricReport) -> list[dict]:
    """Deletion/insertion/substitution rates bucketed by reference speaker count.

    Rates are micro-aggregated within each bucket; the overlap ratio is
    overlapped reference speaker-time over total reference speaker-time.
    """
    buckets: dict[int, list[dict]] = {}
    for entry in report.per_session.values():
        if 'tcpwer' not in entry:
            continue
        count = entry['session_stats']['ref_speaker_count']
        buckets.setdefault(count, []).append(entry)

    rows = []
    for count in sorted(buckets):
        entries = buckets[count]
        n_ref = sum(e['tcpwer']['n_ref'] for e in entries)
        speech = sum(e['session_stats']['ref_speech_time'] for e in entries)
        overlapped = sum(e['session_stats']['overlapped_speech_time'] for e in entries)
        rows.append({
            'speaker_count': count,
            'n_sessions': len(entries),
            'n_ref': n_ref,
            'deletion_rate': sum(e['tcpwer']['deletions'] for e in entries) / n_ref if n_ref else 0.0,
            'insertion_rate': sum(e['tcpwer']['insertions'] for e in entries) / n_ref if n_ref else 0.0,
            'substitution_rate': sum(e['tcpwer']['substitutions'] for e in entries) / n_ref if n_ref else 0.0,
            'overlap_ratio': overlapped / speech if speech else 0.0,
        })
    return rows


_TABLE_KEYS = (
    ('cpwer', 'error_rate'),
    ('tcpwer', 'error_rate'),
    ('decomposition', 'tcpwer_ov'),
    ('decomposition', 'tcpwer_1spk'),
    ('decomposition', 'tcpwer_ov_norm'),
    ('decomposition', 'tcpwer_1spk_norm'),
    ('tcpsemer', 'rate'),
    ('der', 'rate'),
)


def to_table(report: MetricReport) -> str:
    """Flat tab-separated rendering: one row per session plus an aggregate row."""
    header = ['session'] + [f'{m}.{k}' for m, k in _TABLE_KEYS]
    lines = ['\t'.join(header)]

    def fmt(value) -> str:
        if value is None:
            return 'NA'
        return repr(value) if isinstance(value, float) else str(value)

    def row(label, entry):
        cells = [label]
        for metric, key in _TABLE_KEYS:
            cells.append(fmt(entry.get(metric, {}).get(key)) if metric in entry else 'NA')
        return '\t'.join(cells)

    for sid in sorted(report.per_session):
        lines.append(row(sid, report.per_session[sid]))
    lines.append(row('(aggregate)', report.aggregate))
    return '\n'.join(lines) + '\n'
