import socket
import threading

import pytest

from tracksentry_bridge import Server, fake_adapters


@pytest.fixture
def server():
    srv = Server(fake_adapters(), "127.0.0.1", 0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.close()


@pytest.fixture
def client(server):
    sock = socket.create_connection(("127.0.0.1", server.port), timeout=10)
    stream = sock.makefile("rwb")
    yield stream
    stream.close()
    sock.close()
