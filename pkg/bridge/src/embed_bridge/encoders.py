"""Sentence-encoder backends.

The default backend wraps a sentence-transformers model (MiniLM-L12-v2 by
default). A hermetic ``hash://<dim>`` backend embeds by hashed bag of
words and needs no model download; it exists so the service contract can
be exercised offline.

All backends return L2-normalized vectors, so a client's cosine reduces
to a dot product.
"""

from __future__ import annotations

import math

DEFAULT_MODEL = 'sentence-transformers/all-MiniLM-L12-v2'

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


class HashEncoder:
    """Deterministic hashed bag-of-words encoder (no model, no network)."""

    def __init__(self, dimension: int = 256):
        if dimension < 1:
            raise ValueError(f'dimension must be positive, got {dimension}')
        self.name = f'hash://{dimension}'
        self.dimension = dimension

    def encode(self, texts: list[str]) -> list[list[float]]:
        return [self._one(text) for text in texts]

    def _one(self, text: str) -> list[float]:
        vec = [0.0] * self.dimension
        for token in text.split():
            h = _FNV_OFFSET
            for byte in token.encode('utf-8'):
                h = ((h ^ byte) * _FNV_PRIME) & _U64
            vec[h % self.dimension] += 1.0
        norm = math.sqrt(sum(x * x for x in vec))
        if norm > 0:
            vec = [x / norm for x in vec]
        return vec


class SentenceTransformerEncoder:
    """sentence-transformers backend with normalized outputs."""

    def __init__(self, model_name: str = DEFAULT_MODEL):
        from sentence_transformers import SentenceTransformer

        self.name = model_name
        self._model = SentenceTransformer(model_name)
        self.dimension = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> list[list[float]]:
        embeddings = self._model.encode(
            texts, normalize_embeddings=True, convert_to_numpy=True,
            show_progress_bar=False)
        return [vec.tolist() for vec in embeddings]


def load_encoder(model_name: str | None = None):
    """Instantiate the backend selected by name (``hash://N`` or a model id)."""
    name = model_name or DEFAULT_MODEL
    if name.startswith('hash://'):
        return HashEncoder(int(name[len('hash://'):] or 256))
    return SentenceTransformerEncoder(name)
