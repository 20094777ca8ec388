"""HTTP sentence-embedding service consumed by tcmeval's tcpSemER."""

from .app import create_app
from .encoders import DEFAULT_MODEL, HashEncoder, load_encoder

__version__ = '0.1.0'
