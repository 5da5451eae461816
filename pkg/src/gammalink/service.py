"""Read-only session service.

JSON-over-HTTP wrapper around a loaded :class:`~gammalink.session.Session`.
All endpoints are idempotent GETs and reply with the same canonical JSON the
CLI produces for the equivalent query, so the two are byte-identical.  The
session is immutable after load; the only shared mutable state is the
session's insert-only flattening cache, which is lock-guarded, so any number
of concurrent readers see the same responses as sequential execution.

Routes:

- ``/api/meta``                          dataset/kernel/family/grid summary
- ``/api/points``                        coordinates (when Euclidean) + weights
- ``/api/vineyard``                      the vineyard JSON verbatim
- ``/api/slice/{i}``                     diagram + forest summary at grid index i
- ``/api/flatten?i=&tau=&m=&order=``     flat clustering (m, order optional)
- ``/api/band?i=``                       confidence band at grid index i

Validation failures return 400 with a JSON ``{"error": ...}`` body (an
out-of-range or malformed grid index reports ``"theta index"``); unknown
routes return 404; mutation verbs return 405.  Handlers never return 5xx
for requests over a valid session: unexpected errors are reported as 400
``"bad request"``.
"""

from __future__ import annotations

from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from ._jsonutil import dumps
from .session import Session
from .space import ValidationError

__all__ = ["make_server", "serve_forever"]

_LOCAL_HOSTS = ("localhost", "127.0.0.1", "[::1]", "::1")


def _is_local_origin(origin: str) -> bool:
    try:
        host = urlsplit(origin).hostname
    except ValueError:
        return False
    return host in ("localhost", "127.0.0.1", "::1")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    # the server instance carries the session
    @property
    def session(self) -> Session:
        return self.server.session  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, obj) -> None:
        body = dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        origin = self.headers.get("Origin")
        if origin and _is_local_origin(origin):
            self.send_header("Access-Control-Allow-Origin", origin)
            self.send_header("Vary", "Origin")
        self.end_headers()
        self.wfile.write(body)

    def _read_only(self) -> None:
        self.send_response(405)
        self.send_header("Allow", "GET, OPTIONS")
        body = dumps({"error": "read-only"}).encode("utf-8")
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    do_POST = do_PUT = do_DELETE = do_PATCH = _read_only

    def do_OPTIONS(self) -> None:  # CORS preflight
        self.send_response(204)
        origin = self.headers.get("Origin")
        if origin and _is_local_origin(origin):
            self.send_header("Access-Control-Allow-Origin", origin)
            self.send_header("Access-Control-Allow-Methods", "GET, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Vary", "Origin")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self) -> None:
        try:
            self._route()
        except ValidationError as exc:
            self._send(400, {"error": str(exc)})
        except BrokenPipeError:
            pass
        except Exception:
            self._send(400, {"error": "bad request"})

    def _route(self) -> None:
        url = urlsplit(self.path)
        path = url.path.rstrip("/") or "/"
        query = parse_qs(url.query)
        session = self.session
        if path == "/api/meta":
            self._send(200, session.meta_dict())
        elif path == "/api/points":
            coords = session.coords
            self._send(200, {
                "coords": None if coords is None
                else [[float(v) for v in row] for row in coords],
                "weights": [float(w) for w in session.weights],
            })
        elif path == "/api/vineyard":
            self._send(200, session.vineyard_dict)
        elif path.startswith("/api/slice/"):
            idx = path[len("/api/slice/"):]
            self._send(200, session.slice_dict(_as_index(idx)))
        elif path == "/api/band":
            self._send(200, session.band_dict(_as_index(_q1(query, "i"))))
        elif path == "/api/flatten":
            idx = _as_index(_q1(query, "i"))
            tau = _as_float(_q1(query, "tau"), "tau")
            m = _as_float(_q1(query, "m"), "min-mass") if "m" in query else 0.0
            order = _q1(query, "order") if "order" in query else "pm"
            self._send(200, session.flatten(idx, tau, m, order))
        else:
            self._send(404, {"error": "not found"})


def _q1(query: dict, key: str) -> str:
    vals = query.get(key)
    if not vals:
        raise ValidationError("theta index" if key == "i" else key)
    return vals[0]


def _as_index(text) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ValidationError("theta index") from None


def _as_float(text, what: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ValidationError(what) from None


def make_server(session: Session, port: int = 0,
                host: str = "127.0.0.1") -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, int(port)), _Handler)
    server.session = session  # type: ignore[attr-defined]
    server.daemon_threads = True
    return server


def serve_forever(session: Session, port: int, host: str = "127.0.0.1") -> None:
    server = make_server(session, port, host)
    try:
        server.serve_forever()
    finally:
        server.server_close()
