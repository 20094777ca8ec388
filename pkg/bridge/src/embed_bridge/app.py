"""The embedding service: ``POST /embed`` and ``GET /health``.

The model is loaded once at startup; until it is ready, embed calls are
rejected with 503. Request batches carry 1..256 texts of at most 8192
UTF-8 bytes each; responses preserve request order and return
L2-normalized vectors.
"""

from __future__ import annotations

import os
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator

from .encoders import load_encoder

MAX_BATCH = 256
MAX_TEXT_BYTES = 8192


class EmbedRequest(BaseModel):
    texts: list[str] = Field(min_length=1, max_length=MAX_BATCH)

    @field_validator('texts')
    @classmethod
    def texts_within_size(cls, texts):
        for i, text in enumerate(texts):
            if len(text.encode('utf-8')) > MAX_TEXT_BYTES:
                raise ValueError(f'text {i} exceeds {MAX_TEXT_BYTES} bytes')
        return texts


class EmbedResponse(BaseModel):
    model: str
    dimension: int
    embeddings: list[list[float]]


class HealthResponse(BaseModel):
    model: str
    dimension: int


def create_app(model_name: str | None = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.encoder = load_encoder(app.state.model_name)
        yield

    app = FastAPI(title='embed-bridge', lifespan=lifespan)
    app.state.encoder = None
    app.state.model_name = model_name or os.environ.get('EMBED_MODEL')

    def encoder_or_503():
        encoder = app.state.encoder
        if encoder is None:
            raise HTTPException(status_code=503, detail='model not loaded yet')
        return encoder

    @app.get('/health', response_model=HealthResponse)
    def health():
        encoder = encoder_or_503()
        return HealthResponse(model=encoder.name, dimension=encoder.dimension)

    @app.post('/embed', response_model=EmbedResponse)
    def embed(request: EmbedRequest):
        encoder = encoder_or_503()
        try:
            embeddings = encoder.encode(request.texts)
        except Exception as e:  # model failure is a server-side error
            raise HTTPException(status_code=500, detail=f'embedding failed: {e}') from e
        return EmbedResponse(
            model=encoder.name, dimension=encoder.dimension, embeddings=embeddings)

    return app


app = create_app()
