"""Test-only helpers: a local stub image server and tiny deterministic images.

Nothing in the pipeline imports this module; tests and the demo scripts use
it to stand in for the open internet.
"""

from __future__ import annotations

import hashlib
import io
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from PIL import Image


def make_png(width: int = 4, height: int = 4, seed: int = 0) -> bytes:
    """A small solid-color PNG whose pixels are a deterministic function of seed."""
    digest = hashlib.sha256(seed.to_bytes(8, "little", signed=True)).digest()
    img = Image.new("RGB", (width, height), tuple(digest[:3]))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def garbage_bytes(name: str, size: int = 64) -> bytes:
    """Deterministic non-image payload (no magic header) derived from name."""
    out = b""
    counter = 0
    while len(out) < size:
        out += hashlib.sha256(f"garbage:{name}:{counter}".encode()).digest()
        counter += 1
    return b"\x00" + out[: size - 1]


class ConcurrencyMonitor:
    """Tracks in-flight requests and the peak, shareable across servers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.in_flight = 0
        self.peak = 0

    def enter(self) -> None:
        with self._lock:
            self.in_flight += 1
            self.peak = max(self.peak, self.in_flight)

    def exit(self) -> None:
        with self._lock:
            self.in_flight -= 1


class StubImageServer:
    """Local HTTP server with fault injection, driven by the URL path.

    Routes (all GET):
      /img/<name>          200 with a PNG derived from <name>
      /bytes/<name>        200 with a payload registered via add_payload
      /zero/<name>         200 with an empty body
      /garbage/<name>      200 with undecodable bytes
      /missing/<name>      404
      /flaky/<n>/<name>    503 for the first n hits on this path, then a PNG
      /slow/<ms>/<name>    PNG after sleeping <ms> milliseconds

    Request paths and statuses are logged; `monitor.peak` reports the highest
    number of simultaneously in-flight requests this server (or any server
    sharing the monitor) has seen.
    """

    def __init__(self, handle_delay_s: float = 0.0, monitor: ConcurrencyMonitor | None = None):
        self.monitor = monitor or ConcurrencyMonitor()
        self.request_log: list[tuple[str, int]] = []
        self._log_lock = threading.Lock()
        self._flaky_counts: dict[str, int] = {}
        self._payloads: dict[str, bytes] = {}
        self._handle_delay_s = handle_delay_s
        stub = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):  # silence default stderr logging
                pass

            def do_GET(self):
                stub.monitor.enter()
                try:
                    if stub._handle_delay_s:
                        time.sleep(stub._handle_delay_s)
                    status, body = stub._route(self.path)
                    with stub._log_lock:
                        stub.request_log.append((self.path, status))
                    self.send_response(status)
                    self.send_header("Content-Length", str(len(body)))
                    if status == 200:
                        self.send_header("Content-Type", "application/octet-stream")
                    self.end_headers()
                    self.wfile.write(body)
                finally:
                    stub.monitor.exit()

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def _route(self, path: str) -> tuple[int, bytes]:
        path = path.split("?", 1)[0]  # query string never affects the payload
        parts = path.strip("/").split("/", 2)
        kind = parts[0] if parts else ""
        if kind == "img" and len(parts) >= 2:
            return 200, make_png(seed=int.from_bytes(hashlib.sha256(parts[1].encode()).digest()[:4], "little"))
        if kind == "bytes" and len(parts) >= 2 and parts[1] in self._payloads:
            return 200, self._payloads[parts[1]]
        if kind == "zero":
            return 200, b""
        if kind == "garbage" and len(parts) >= 2:
            return 200, garbage_bytes(parts[1])
        if kind == "missing":
            return 404, b"not found"
        if kind == "flaky" and len(parts) >= 3:
            n = int(parts[1])
            with self._log_lock:
                count = self._flaky_counts.get(path, 0)
                self._flaky_counts[path] = count + 1
            if count < n:
                return 503, b"try later"
            return 200, make_png(seed=1)
        if kind == "slow" and len(parts) >= 3:
            time.sleep(int(parts[1]) / 1000.0)
            return 200, make_png(seed=2)
        return 404, b"unknown route"

    def add_payload(self, name: str, data: bytes) -> str:
        self._payloads[name] = data
        return f"{self.base_url}/bytes/{name}"

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def url(self, path: str) -> str:
        return f"{self.base_url}/{path.lstrip('/')}"

    def requests_for(self, path: str) -> list[tuple[str, int]]:
        with self._log_lock:
            return [(p, s) for p, s in self.request_log if p == path]

    def __enter__(self) -> "StubImageServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()
