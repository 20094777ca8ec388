"""Service contract: health readiness, batch validation, order, norms.

Runs against the hermetic hash backend; the wire-level tests use a real
uvicorn server so the full HTTP protocol is exercised.
"""

import math
import threading
import time

import pytest
import requests
import uvicorn
from fastapi.testclient import TestClient

from embed_bridge.app import create_app
from embed_bridge.encoders import HashEncoder, load_encoder


@pytest.fixture()
def client():
    with TestClient(create_app('hash://64')) as c:
        yield c


@pytest.fixture(scope='module')
def live_url():
    app = create_app('hash://64')
    config = uvicorn.Config(app, host='127.0.0.1', port=0, log_level='warning')
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError('bridge server did not start')
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f'http://127.0.0.1:{port}'
    server.should_exit = True
    thread.join(timeout=5)


class TestHealth:

    def test_health_reports_model(self, client):
        response = client.get('/health')
        assert response.status_code == 200
        body = response.json()
        assert body['model'] == 'hash://64'
        assert body['dimension'] == 64

    def test_not_ready_before_startup(self):
        # Without running the lifespan, no model is loaded: both endpoints
        # must refuse with 503 rather than serve garbage.
        client = TestClient(create_app('hash://64'))
        assert client.get('/health').status_code == 503
        assert client.post('/embed', json={'texts': ['x']}).status_code == 503


class TestEmbedValidation:

    def test_empty_batch_rejected(self, client):
        assert client.post('/embed', json={'texts': []}).status_code == 422

    def test_oversize_batch_rejected(self, client):
        response = client.post('/embed', json={'texts': ['x'] * 257})
        assert 400 <= response.status_code < 500

    def test_max_batch_accepted(self, client):
        response = client.post('/embed', json={'texts': ['x'] * 256})
        assert response.status_code == 200
        assert len(response.json()['embeddings']) == 256

    def test_oversize_text_rejected(self, client):
        response = client.post('/embed', json={'texts': ['a' * 8193]})
        assert 400 <= response.status_code < 500

    def test_max_text_accepted(self, client):
        response = client.post('/embed', json={'texts': ['a' * 8192]})
        assert response.status_code == 200

    def test_missing_field_rejected(self, client):
        assert client.post('/embed', json={}).status_code == 422


class TestEmbedSemantics:

    def test_identical_texts_identical_vectors(self, client):
        body = client.post('/embed', json={'texts': ['a', 'a']}).json()
        assert body['embeddings'][0] == body['embeddings'][1]

    def test_unit_norm(self, client):
        body = client.post('/embed', json={'texts': ['hello world']}).json()
        norm = math.sqrt(sum(x * x for x in body['embeddings'][0]))
        assert abs(norm - 1.0) < 1e-5

    def test_dimension_consistent(self, client):
        body = client.post('/embed', json={'texts': ['one', 'two three']}).json()
        assert body['dimension'] == 64
        assert all(len(vec) == 64 for vec in body['embeddings'])

    def test_model_failure_is_5xx(self):
        class Broken(HashEncoder):
            def encode(self, texts):
                raise RuntimeError('backend exploded')

        app = create_app('hash://8')
        with TestClient(app, raise_server_exceptions=False) as client:
            app.state.encoder = Broken(8)
            response = client.post('/embed', json={'texts': ['x']})
            assert response.status_code == 500


class TestWireContract:
    """Criterion: /health before /embed, order and norms on batches of 64."""

    def test_health_then_embed_order_and_norms(self, live_url):
        health = requests.get(f'{live_url}/health', timeout=10)
        assert health.status_code == 200
        dimension = health.json()['dimension']

        texts = [f'utterance number {i} with words' for i in range(64)]
        response = requests.post(f'{live_url}/embed', json={'texts': texts}, timeout=30)
        assert response.status_code == 200
        body = response.json()
        assert len(body['embeddings']) == 64
        assert body['dimension'] == dimension

        # Order preservation: each position matches its single-text embed.
        for i in (0, 1, 7, 31, 63):
            single = requests.post(
                f'{live_url}/embed', json={'texts': [texts[i]]}, timeout=10).json()
            assert body['embeddings'][i] == single['embeddings'][0], i

        for vec in body['embeddings']:
            norm = math.sqrt(sum(x * x for x in vec))
            assert abs(norm - 1.0) < 1e-5

    def test_repeated_request_identical(self, live_url):
        payload = {'texts': ['alpha beta', 'gamma']}
        a = requests.post(f'{live_url}/embed', json=payload, timeout=10).json()
        b = requests.post(f'{live_url}/embed', json=payload, timeout=10).json()
        assert a == b

    def test_concurrent_requests(self, live_url):
        from concurrent.futures import ThreadPoolExecutor

        def hit(i):
            texts = [f'thread {i} text {k}' for k in range(5)]
            body = requests.post(f'{live_url}/embed', json={'texts': texts},
                                 timeout=30).json()
            return texts, body['embeddings']

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(hit, range(16)))
        for texts, embeddings in results:
            assert len(embeddings) == len(texts)
            singles = requests.post(f'{live_url}/embed', json={'texts': texts},
                                    timeout=30).json()['embeddings']
            assert embeddings == singles


class TestPrimaryIntegration:
    """The scoring toolkit consumes the bridge through its public surface."""

    def test_tcpsemer_via_bridge(self, live_url):
        from tcmeval import BridgeEmbedder, Segment, SessionTranscript, tcpsemer

        ref = SessionTranscript('s', (Segment('s', 'A', 0, 2, 'one two three'),))
        hyp = SessionTranscript('s', (Segment('s', 'A', 0, 2, 'one two nope'),))
        provider = BridgeEmbedder(live_url)
        assert provider.name == 'hash://64'
        report = tcpsemer(ref, hyp, collar=5.0, provider=provider)
        assert 0.0 <= report.rate <= 1.0

    def test_cli_via_bridge(self, live_url, tmp_path):
        import json

        from tcmeval.cli import main

        lines = [json.dumps({'session_id': 's', 'speaker': 'A',
                             'start_time': 0.0, 'end_time': 2.0,
                             'words': 'one two three'})]
        ref = tmp_path / 'ref.jsonl'
        hyp = tmp_path / 'hyp.jsonl'
        ref.write_text('\n'.join(lines), encoding='utf-8')
        hyp.write_text('\n'.join(lines), encoding='utf-8')
        out = tmp_path / 'out.json'
        code = main(['tcpsemer', '--ref', str(ref), '--hyp', str(hyp),
                     '--embedder', f'bridge={live_url}', '--out', str(out)])
        assert code == 0
        doc = json.loads(out.read_text('utf-8'))
        assert doc['config_echo']['embedder'] == 'hash://64'
        assert doc['aggregate']['tcpsemer']['rate'] == 0.0


class TestEncoders:

    def test_hash_encoder_loading(self):
        encoder = load_encoder('hash://32')
        assert encoder.dimension == 32
        assert encoder.name == 'hash://32'

    def test_hash_bag_of_words(self):
        encoder = HashEncoder(16)
        (a,) = encoder.encode(['x y'])
        (b,) = encoder.encode(['y x'])
        assert a == b

    def test_hash_empty_text_zero_vector(self):
        encoder = HashEncoder(16)
        (vec,) = encoder.encode([''])
        assert vec == [0.0] * 16

    def test_bad_dimension(self):
        with pytest.raises(ValueError):
            HashEncoder(0)
