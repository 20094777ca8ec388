"""Command-line interface.

Subcommands mirror the metric suite: ``cpwer``, ``tcpwer`` (optionally
with the overlap decomposition), ``tcpsemer``, ``der``, an everything-in-
one ``report``, and ``sensitivity`` for comparing two report directories.
Exit codes: 0 success, 1 validation error, 2 internal error.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from .der import DEFAULT_DER_COLLAR
from .errors import TcmevalError, ValidationError
from .normalize import NormScheme, load_filler_lexicon
from .report import ALL_METRICS, MetricReport, score_sessions, sensitivity, to_table
from .semer import BridgeEmbedder, BuiltinEmbedder
from .transcript import HYPOTHESIS, REFERENCE, parse_seglst
from .wer import DEFAULT_COLLAR


def _add_io_args(parser, hyp_required=True):
    parser.add_argument('--ref', required=True, help='reference SegLST file')
    parser.add_argument('--hyp', required=hyp_required, help='hypothesis SegLST file')
    parser.add_argument('--out', default='-',
                        help='output path, or - for standard output (default)')


def _add_norm_args(parser):
    parser.add_argument('--normalizer', choices=('none', 'verbatim', 'forgiving'),
                        default='verbatim', help='text normalization scheme')
    parser.add_argument('--filler-lexicon', metavar='PATH',
                        help='filler lexicon file (one token per line)')


def _add_embedder_arg(parser):
    parser.add_argument('--embedder', default='builtin',
                        help="'builtin' or 'bridge=URL' (embed-bridge service)")
    parser.add_argument('--no-clamp', action='store_true',
                        help='use raw cosine similarity without clamping to [0, 1]')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='tcmeval',
        description='Multi-speaker ASR scoring: cpWER, tcpWER, tcpSemER, DER.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('cpwer', help='concatenated minimum-permutation WER')
    _add_io_args(p)
    _add_norm_args(p)

    p = sub.add_parser('tcpwer', help='time-constrained minimum-permutation WER')
    _add_io_args(p)
    _add_norm_args(p)
    p.add_argument('--collar', type=float, default=DEFAULT_COLLAR)
    p.add_argument('--symmetric-collar', action='store_true',
                   help='widen both word intervals by the collar')
    p.add_argument('--decompose', action='store_true',
                   help='also report the overlap-aware error decomposition')

    p = sub.add_parser('tcpsemer', help='time-constrained semantic error rate')
    _add_io_args(p)
    _add_norm_args(p)
    p.add_argument('--collar', type=float, default=DEFAULT_COLLAR)
    p.add_argument('--symmetric-collar', action='store_true')
    _add_embedder_arg(p)

    p = sub.add_parser('der', help='diarization error rate')
    _add_io_args(p)
    p.add_argument('--der-collar', type=float, default=DEFAULT_DER_COLLAR)

    p = sub.add_parser('report', help='all metrics in one document')
    _add_io_args(p)
    _add_norm_args(p)
    p.add_argument('--all', action='store_true', help='score every metric (default)')
    p.add_argument('--collar', type=float, default=DEFAULT_COLLAR)
    p.add_argument('--der-collar', type=float, default=DEFAULT_DER_COLLAR)
    p.add_argument('--symmetric-collar', action='store_true')
    _add_embedder_arg(p)
    p.add_argument('--format', choices=('json', 'tsv'), default='json')

    p = sub.add_parser('sensitivity',
                       help='relative metric change between two report directories')
    p.add_argument('--a', required=True, metavar='DIR_A',
                   help='reports under normalization scheme A')
    p.add_argument('--b', required=True, metavar='DIR_B',
                   help='reports under normalization scheme B (same filenames)')
    p.add_argument('--out', default='-')
    return parser


def _load_sessions(path: str, side: str = REFERENCE):
    file = Path(path)
    if not file.exists():
        raise ValidationError(f'input file not found: {path}')
    with file.open('rb') as f:
        return parse_seglst(f, side=side)


def _scheme(args) -> NormScheme:
    lexicon = load_filler_lexicon(args.filler_lexicon) if args.filler_lexicon else None
    return NormScheme.from_name(args.normalizer, lexicon)


def _provider(args):
    spec = args.embedder
    if spec == 'builtin':
        return BuiltinEmbedder()
    if spec.startswith('bridge='):
        return BridgeEmbedder(spec[len('bridge='):])
    raise ValidationError(f"unknown embedder {spec!r}; use 'builtin' or 'bridge=URL'")


def _emit(text: str, out: str):
    if out == '-':
        sys.stdout.write(text)
        if not text.endswith('\n'):
            sys.stdout.write('\n')
        return
    try:
        Path(out).write_text(text if text.endswith('\n') else text + '\n',
                             encoding='utf-8')
    except OSError as e:
        raise ValidationError(f'cannot write output to {out}: {e}') from e


def _run_metric(args, metrics, **kwargs) -> MetricReport:
    refs = _load_sessions(args.ref, side=REFERENCE)
    hyps = _load_sessions(args.hyp, side=HYPOTHESIS)
    return score_sessions(refs, hyps, metrics=metrics, **kwargs)


def run(args) -> int:
    if args.command == 'cpwer':
        report = _run_metric(args, ('cpwer',), scheme=_scheme(args))
        _emit(report.to_json(), args.out)
    elif args.command == 'tcpwer':
        metrics = ('tcpwer', 'decomposition') if args.decompose else ('tcpwer',)
        report = _run_metric(args, metrics, scheme=_scheme(args),
                             collar=args.collar,
                             symmetric_collar=args.symmetric_collar)
        _emit(report.to_json(), args.out)
    elif args.command == 'tcpsemer':
        report = _run_metric(args, ('tcpsemer',), scheme=_scheme(args),
                             collar=args.collar,
                             symmetric_collar=args.symmetric_collar,
                             provider=_provider(args),
                             clamp=not args.no_clamp)
        _emit(report.to_json(), args.out)
    elif args.command == 'der':
        report = _run_metric(args, ('der',), der_collar=args.der_collar)
        _emit(report.to_json(), args.out)
    elif args.command == 'report':
        report = _run_metric(
            args, ALL_METRICS,
            scheme=_scheme(args), collar=args.collar,
            der_collar=args.der_collar,
            symmetric_collar=args.symmetric_collar,
            provider=_provider(args), clamp=not args.no_clamp)
        text = to_table(report) if args.format == 'tsv' else report.to_json()
        _emit(text, args.out)
    elif args.command == 'sensitivity':
        dir_a, dir_b = Path(args.a), Path(args.b)
        names = sorted(p.name for p in dir_a.glob('*.json'))
        if not names:
            raise ValidationError(f'no report files (*.json) in {args.a}')
        missing = [n for n in names if not (dir_b / n).exists()]
        if missing:
            raise ValidationError(
                f'report(s) missing under scheme B: {", ".join(missing)}')
        reports_a = [MetricReport.from_json((dir_a / n).read_text('utf-8')) for n in names]
        reports_b = [MetricReport.from_json((dir_b / n).read_text('utf-8')) for n in names]
        rows = sensitivity(reports_a, reports_b)
        import json
        _emit(json.dumps({
            'systems': names,
            'rows': [{
                'metric': r.metric,
                'per_system_rel_change': list(r.per_system_rel_change),
                'mean': r.mean,
                'std': r.std,
            } for r in rows],
        }, indent=2), args.out)
    else:  # pragma: no cover - argparse enforces the choices
        raise ValidationError(f'unknown command {args.command!r}')
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses exit code 2 for usage errors; our contract says 1.
        return 0 if not e.code else 1
    try:
        return run(args)
    except TcmevalError as e:
        print(f'tcmeval: error: {e}', file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == '__main__':
    sys.exit(main())
