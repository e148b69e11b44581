"""Length-prefixed JSON framing and image payload codecs.

Framing: 4-byte big-endian unsigned body length, then a UTF-8 JSON body
{id, kind, payload}. Images travel as base64 of raw row-major bytes.
This module operates on buffered binary streams (socket.makefile("rwb")
or the stdio pipes), so TCP and stdio connections share one code path.
"""

from __future__ import annotations

import base64
import json
import struct

import numpy as np

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 64 * 1024 * 1024


def write_frame(stream, body: dict) -> None:
    raw = json.dumps(body, sort_keys=True).encode()
    stream.write(struct.pack(">I", len(raw)) + raw)
    stream.flush()


def read_exact(stream, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            raise ConnectionError("stream closed mid-frame")
        buf += chunk
    return buf


def read_frame(stream) -> dict:
    (length,) = struct.unpack(">I", read_exact(stream, 4))
    if length > MAX_FRAME_BYTES:
        raise ConnectionError(f"frame of {length} bytes exceeds limit")
    return json.loads(read_exact(stream, length).decode())


def image_to_payload(img: np.ndarray) -> dict:
    img = np.ascontiguousarray(img)
    channels = 1 if img.ndim == 2 else img.shape[2]
    return {"width": int(img.shape[1]), "height": int(img.shape[0]),
            "channels": channels,
            "encoding": base64.b64encode(img.astype(np.uint8).tobytes()).decode()}


def payload_to_image(p: dict) -> np.ndarray:
    raw = base64.b64decode(p["encoding"])
    expect = p["width"] * p["height"] * p["channels"]
    if len(raw) != expect:
        raise ValueError(f"payload has {len(raw)} bytes, expected {expect}")
    arr = np.frombuffer(raw, dtype=np.uint8)
    if p["channels"] == 1:
        return arr.reshape(p["height"], p["width"]).copy()
    return arr.reshape(p["height"], p["width"], p["channels"]).copy()
