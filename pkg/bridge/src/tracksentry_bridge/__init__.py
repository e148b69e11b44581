"""Wire-protocol server adapters for tracksentry's external backend mode."""

from .adapters import (ADAPTER_SETS, CHECKERBOARD_8X8, Adapter,
                       FakeEstimator, FakeMatcher, FakeSegmenter,
                       fake_adapters)
from .framing import (MAX_FRAME_BYTES, PROTOCOL_VERSION, image_to_payload,
                      payload_to_image, read_frame, write_frame)
from .server import Connection, Server, serve

__all__ = [
    "ADAPTER_SETS", "CHECKERBOARD_8X8", "Adapter", "Connection",
    "FakeEstimator", "FakeMatcher", "FakeSegmenter", "MAX_FRAME_BYTES",
    "PROTOCOL_VERSION", "Server", "fake_adapters", "image_to_payload",
    "payload_to_image", "read_frame", "serve", "write_frame",
]
