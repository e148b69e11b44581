"""Client side of the length-prefixed JSON wire protocol.

Framing: 4-byte big-endian unsigned body length, then a UTF-8 JSON body
{id, kind, payload}. Kinds: hello, segment, match, register, track,
result, error. Images travel as base64 of raw row-major bytes.
"""

from __future__ import annotations

import base64
import json
import socket
import struct
import threading

import numpy as np

from .backends import Correspondence, PointPrompt
from .errors import BackendUnavailable
from .geometry import Pose
from .mask import BinaryMask

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 64 * 1024 * 1024


def encode_frame(body: dict) -> bytes:
    raw = json.dumps(body, sort_keys=True).encode()
    return struct.pack(">I", len(raw)) + raw


def read_exact(sock, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("connection closed mid-frame")
        buf += chunk
    return buf


def read_frame(sock) -> dict:
    (length,) = struct.unpack(">I", read_exact(sock, 4))
    if length > MAX_FRAME_BYTES:
        raise ConnectionError(f"frame of {length} bytes exceeds limit")
    return json.loads(read_exact(sock, length).decode())


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


class ProtocolClient:
    """Thread-safe request/response client; responses matched by id."""

    def __init__(self, sock):
        self.sock = sock
        self._lock = threading.Lock()
        self._next_id = 0
        self._hello()

    @classmethod
    def connect(cls, host: str, port: int, timeout: float = 10.0):
        sock = socket.create_connection((host, port), timeout=timeout)
        return cls(sock)

    def _hello(self):
        reply = self.request("hello", {"protocol_version": PROTOCOL_VERSION})
        if reply.get("protocol_version") != PROTOCOL_VERSION:
            raise BackendUnavailable(
                f"server speaks protocol {reply.get('protocol_version')}")

    def request(self, kind: str, payload: dict) -> dict:
        with self._lock:
            self._next_id += 1
            rid = self._next_id
            self.sock.sendall(encode_frame(
                {"id": rid, "kind": kind, "payload": payload}))
            reply = read_frame(self.sock)
        if reply.get("id") != rid:
            raise BackendUnavailable(
                f"response id {reply.get('id')} does not match request {rid}")
        if reply.get("kind") == "error":
            raise BackendUnavailable(reply.get("payload", {}).get("message", "error"))
        return reply.get("payload", {})

    def segment(self, rgb, prompt: PointPrompt) -> BinaryMask:
        payload = {"image": image_to_payload(rgb),
                   "points": prompt.points.tolist(),
                   "labels": prompt.labels.tolist()}
        out = self.request("segment", payload)
        return BinaryMask(payload_to_image(out["mask"]))

    def match(self, reference, frame) -> list[Correspondence]:
        payload = {"reference": image_to_payload(np.asarray(reference)),
                   "frame": image_to_payload(np.asarray(frame))}
        out = self.request("match", payload)
        return [Correspondence(ref_point=tuple(m["ref_point"]),
                               frame_point=tuple(m["frame_point"]),
                               score=float(m["score"]))
                for m in out.get("matches", [])]

    def register(self, rgb, depth, mask: BinaryMask, model_id: str) -> Pose:
        payload = {"image": image_to_payload(rgb),
                   "mask": image_to_payload(mask.data),
                   "model_id": model_id}
        if depth is not None:
            payload["depth_mm"] = image_to_payload(
                (np.asarray(depth) // 256).astype(np.uint8))
        out = self.request("register", payload)
        return Pose(np.asarray(out["R"]).reshape(3, 3), np.asarray(out["t"]))

    def track(self, rgb, depth, prev_pose: Pose, model_id: str) -> Pose:
        payload = {"image": image_to_payload(rgb),
                   "prev_pose": {"R": prev_pose.rotation.ravel().tolist(),
                                 "t": prev_pose.translation.tolist()},
                   "model_id": model_id}
        out = self.request("track", payload)
        return Pose(np.asarray(out["R"]).reshape(3, 3), np.asarray(out["t"]))

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass
