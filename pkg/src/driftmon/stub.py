"""A scriptable local HTTP server for exercising the live validator offline."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit


@dataclass
class StubRoute:
    status: int = 200
    body: object = None  # dict/list is sent as JSON, str/bytes verbatim
    headers: dict[str, str] = field(default_factory=dict)
    delay: float = 0.0
    head_status: int | None = None  # override for HEAD only (e.g. 405)


class _Handler(BaseHTTPRequestHandler):
    server: "_Server"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _serve(self, with_body: bool):
        stub: StubServer = self.server.stub
        route = stub.lookup(self.path)
        stub.record(self.command, self.path, dict(self.headers))
        if route.delay:
            time.sleep(route.delay)
        status = route.status
        if self.command == "HEAD" and route.head_status is not None:
            status = route.head_status
        payload = route.body
        if isinstance(payload, (dict, list)):
            data = json.dumps(payload).encode("utf-8")
            content_type = "application/json"
        elif isinstance(payload, str):
            data = payload.encode("utf-8")
            content_type = "text/plain; charset=utf-8"
        else:
            data = payload or b""
            content_type = "application/octet-stream"
        try:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(data)))
            for k, v in route.headers.items():
                self.send_header(k, v.replace("{base}", stub.base_url))
            self.end_headers()
            if with_body and self.command != "HEAD":
                self.wfile.write(data)
        except (BrokenPipeError, ConnectionResetError):
            pass  # client gave up (timeout tests)

    def do_GET(self):
        self._serve(True)

    def do_HEAD(self):
        self._serve(False)


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True


class StubServer:
    """Serve scripted routes on 127.0.0.1 at an ephemeral port.

    Routes are keyed by path, optionally with query string; an exact
    path+query entry wins over a bare path entry. Unknown paths get 404.
    Header values may contain ``{base}``, replaced by the server's base URL.

    >>> with StubServer({"/ok": StubRoute(200)}) as stub:
    ...     url = stub.url("/ok")
    """

    def __init__(self, routes: dict[str, StubRoute] | None = None):
        self.routes: dict[str, StubRoute] = dict(routes or {})
        self.requests: list[tuple[str, str, dict]] = []
        self._lock = threading.Lock()
        self._httpd: _Server | None = None
        self._thread: threading.Thread | None = None

    def lookup(self, raw_path: str) -> StubRoute:
        if raw_path in self.routes:
            return self.routes[raw_path]
        return self.routes.get(urlsplit(raw_path).path, StubRoute(404, {"message": "Not Found"}))

    def record(self, method: str, path: str, headers: dict) -> None:
        with self._lock:
            self.requests.append((method, path, headers))

    @property
    def base_url(self) -> str:
        assert self._httpd is not None, "server not started"
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def url(self, path: str) -> str:
        return self.base_url + path

    def start(self) -> "StubServer":
        self._httpd = _Server(("127.0.0.1", 0), _Handler)
        self._httpd.stub = self
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    def __enter__(self) -> "StubServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
