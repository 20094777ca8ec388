"""Tokenization and text normalization schemes.

Two normalization levels drive the metric-sensitivity analysis: a
``verbatim`` scheme that keeps every spoken token, and a ``forgiving``
scheme that additionally removes fillers and bracketed non-lexical tags.
A third ``none`` scheme only splits on whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError

__all__ = [
    'NormScheme',
    'DEFAULT_FILLERS',
    'normalize',
    'load_filler_lexicon',
]

DEFAULT_FILLERS = frozenset({
    'uh', 'um', 'mm', 'hmm', 'mhm', 'uhhuh', 'eh', 'ah', 'huh', 'er', 'erm',
})

_SCHEME_NAMES = ('none', 'verbatim', 'forgiving')

# Bracketed non-lexical tags, e.g. [laughs] or <noise>.
_TAG_RE = re.compile(r'\[[^\]]*\]|<[^>]*>')
# Stripped punctuation; hyphens split compounds into separate tokens.
_PUNCT_RE = re.compile(r'[.,?!;:"()—-]')


@dataclass(frozen=True)
class NormScheme:
    """A named normalization scheme plus its filler lexicon.

    The lexicon is consulted only by the ``forgiving`` scheme and must be
    non-empty there.
    """
    name: str
    filler_lexicon: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.name not in _SCHEME_NAMES:
            raise ValidationError(
                f'unknown normalization scheme {self.name!r}; expected one of {_SCHEME_NAMES}')
        if self.name == 'forgiving' and not self.filler_lexicon:
            raise ValidationError('forgiving scheme requires a non-empty filler lexicon')

    @classmethod
    def none(cls) -> 'NormScheme':
        return cls(name='none')

    @classmethod
    def verbatim(cls) -> 'NormScheme':
        return cls(name='verbatim')

    @classmethod
    def forgiving(cls, filler_lexicon=None) -> 'NormScheme':
        lexicon = frozenset(filler_lexicon) if filler_lexicon else DEFAULT_FILLERS
        return cls(name='forgiving', filler_lexicon=lexicon)

    @classmethod
    def from_name(cls, name: str, filler_lexicon=None) -> 'NormScheme':
        if name == 'forgiving':
            return cls.forgiving(filler_lexicon)
        return cls(name=name)


def load_filler_lexicon(path) -> frozenset[str]:
    """Read a filler lexicon file: one lowercase token per line, UTF-8."""
    tokens = set()
    for line in Path(path).read_text(encoding='utf-8').splitlines():
        token = line.strip().lower()
        if token:
            tokens.add(token)
    if not tokens:
        raise ValidationError(f'filler lexicon {path} contains no tokens')
    return frozenset(tokens)


def _strip_edge_apostrophes(token: str) -> str:
    return token.strip("'’")


def normalize(text: str, scheme: NormScheme) -> list[str]:
    """Tokenize ``text`` under the given scheme.

    ``none`` splits raw case-preserved text on whitespace. ``verbatim``
    lowercases, strips punctuation and unwraps bracketed tags (``[laughs]``
    keeps ``laughs``). ``forgiving`` additionally deletes bracketed tags
    entirely and drops filler tokens. Both normalized schemes keep internal
    apostrophes ("don't" stays one token).
    """
    if scheme.name == 'none':
        return text.split()

    if scheme.name == 'forgiving':
        text = _TAG_RE.sub(' ', text)
    # Verbatim keeps tag content as ordinary tokens; stray bracket
    # characters (unbalanced tags) are dropped under both schemes.
    text = re.sub(r'[\[\]<>]', ' ', text)

    text = _PUNCT_RE.sub(' ', text.lower())
    tokens = []
    for raw in text.split():
        token = _strip_edge_apostrophes(raw)
        if not token:
            continue
        if scheme.name == 'forgiving' and token in scheme.filler_lexicon:
            continue
        tokens.append(token)
    return tokens
