"""The tracksentry external-protocol client against the bridge server."""

import threading

import numpy as np
import pytest

tracksentry = pytest.importorskip("tracksentry")

from tracksentry.backends import PointPrompt
from tracksentry.protocol import ProtocolClient

from tracksentry_bridge import CHECKERBOARD_8X8, Server, fake_adapters


@pytest.fixture
def endpoint():
    srv = Server(fake_adapters(), "127.0.0.1", 0)
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    yield "127.0.0.1", srv.port
    srv.close()


def test_client_full_session(endpoint):
    client = ProtocolClient.connect(*endpoint)
    rgb = np.zeros((8, 8, 3), dtype=np.uint8)

    mask = client.segment(rgb, PointPrompt.single(4.0, 4.0))
    assert np.array_equal(mask.data, CHECKERBOARD_8X8)

    matches = client.match(rgb, rgb)
    assert [m.score for m in matches] == sorted(
        (m.score for m in matches), reverse=True)

    pose = client.register(rgb, None, mask, "obj")
    assert np.allclose(pose.rotation, np.eye(3))
    assert np.allclose(pose.translation, [0.0, 0.0, 1.0])

    tracked = client.track(rgb, None, pose, "obj")
    assert np.allclose(tracked.translation, pose.translation)
    client.close()
