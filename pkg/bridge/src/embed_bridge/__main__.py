"""Run the service: ``python -m embed_bridge`` or the ``embed-bridge`` script.

Environment: ``EMBED_MODEL`` selects the model (default MiniLM-L12-v2),
``EMBED_PORT`` the port (default 8000).
"""

import os

import uvicorn

from .app import app


def main():
    uvicorn.run(app, host=os.environ.get('EMBED_HOST', '127.0.0.1'),
                port=int(os.environ.get('EMBED_PORT', '8000')))


if __name__ == '__main__':
    main()
