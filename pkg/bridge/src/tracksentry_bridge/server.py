"""Protocol server: handshake, then a concurrent request/response loop.

Each connection starts with a hello/hello handshake carrying
protocol_version. After that, requests are dispatched to a worker pool
and answered out of order; responses are matched to requests by id.
Adapters with concurrent = False are serialized internally.
"""

from __future__ import annotations

import json
import logging
import socket
import struct
import threading
from concurrent.futures import ThreadPoolExecutor

from .adapters import Adapter
from .framing import PROTOCOL_VERSION, read_frame, write_frame

log = logging.getLogger("tracksentry_bridge")

KNOWN_KINDS = ("segment", "match", "register", "track")


class Connection:
    """One client connection over a buffered binary stream."""

    def __init__(self, stream, adapters: dict[str, Adapter], max_workers=8,
                 on_close=None):
        self.stream = stream
        self.adapters = adapters
        self.max_workers = max_workers
        self.on_close = on_close
        self._send_lock = threading.Lock()

    def _reply(self, rid, kind, payload):
        with self._send_lock:
            write_frame(self.stream, {"id": rid, "kind": kind,
                                      "payload": payload})

    def _error(self, rid, message):
        self._reply(rid, "error", {"message": message})

    def _handshake(self) -> bool:
        msg = read_frame(self.stream)
        rid = msg.get("id", 0)
        version = msg.get("payload", {}).get("protocol_version")
        if msg.get("kind") != "hello" or version != PROTOCOL_VERSION:
            self._error(rid, f"unsupported protocol version {version!r}")
            return False
        self._reply(rid, "hello", {"protocol_version": PROTOCOL_VERSION})
        return True

    def _dispatch(self, msg: dict):
        rid = msg.get("id")
        kind = msg.get("kind")
        adapter = self.adapters.get(kind)
        if kind not in KNOWN_KINDS or adapter is None:
            self._error(rid, f"unsupported: {kind}")
            return
        try:
            self._reply(rid, "result",
                        adapter.handle(kind, msg.get("payload", {})))
        except Exception as exc:  # adapter failures answer, not kill, the loop
            log.exception("adapter error for kind=%s id=%s", kind, rid)
            self._error(rid, f"{type(exc).__name__}: {exc}")

    def run(self):
        try:
            if not self._handshake():
                return
            with ThreadPoolExecutor(self.max_workers) as pool:
                while True:
                    try:
                        msg = read_frame(self.stream)
                    except (ConnectionError, struct.error,
                            json.JSONDecodeError, UnicodeDecodeError):
                        return  # closed or malformed frame: drop connection
                    pool.submit(self._dispatch, msg)
        finally:
            try:
                self.stream.close()
            except OSError:
                pass
            if self.on_close is not None:
                self.on_close()


class Server:
    """TCP accept loop; one Connection thread per client."""

    def __init__(self, adapters: dict[str, Adapter], host: str, port: int):
        self.adapters = adapters
        self.sock = socket.create_server((host, port))
        self.port = self.sock.getsockname()[1]
        self._threads: list[threading.Thread] = []

    def serve_forever(self):
        log.info("listening on %s", self.sock.getsockname())
        try:
            while True:
                conn, addr = self.sock.accept()
                log.info("connection from %s", addr)
                stream = conn.makefile("rwb")
                t = threading.Thread(
                    target=Connection(stream, self.adapters,
                                      on_close=conn.close).run, daemon=True)
                t.start()
                self._threads.append(t)
        except OSError:
            return  # socket closed during shutdown

    def close(self):
        self.sock.close()


class _StdioStream:
    """Read/write/flush facade over the stdin/stdout byte pipes."""

    def __init__(self, stdin, stdout):
        self.stdin = stdin
        self.stdout = stdout

    def read(self, n):
        return self.stdin.read(n)

    def write(self, data):
        self.stdout.write(data)

    def flush(self):
        self.stdout.flush()

    def close(self):
        self.stdout.close()


def serve(adapters: dict[str, Adapter], endpoint: str | None) -> None:
    """Run until shutdown on `host:port`, or over stdio when endpoint is None."""
    if endpoint is None:
        import sys
        Connection(_StdioStream(sys.stdin.buffer, sys.stdout.buffer),
                   adapters).run()
        return
    host, _, port = endpoint.rpartition(":")
    Server(adapters, host or "127.0.0.1", int(port)).serve_forever()
