"""ThingSpeak-shaped HTTP face of the broker.

Wire contract (all timestamps in virtual seconds):

    POST /channels                        create a channel (admin token)
    GET  /channels?api_key=ADMIN          list channels with keys (admin)
    GET  /update?api_key=K&field1=V&...   append; body is the new entry id,
                                          or "0" with a Retry-After header
                                          when the write window is closed
    GET  /channels/{id}/feeds/last.json?api_key=K
    GET  /channels/{id}/feeds.json?api_key=K&since=N
    GET  /config.json                     live-run constants for the UI

The admin token comes from the FEEDERSIM_ADMIN_TOKEN environment variable
unless one is passed in. Responses carry permissive CORS headers so a
browser dashboard served from anywhere can poll us.
"""

from __future__ import annotations

import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any
from urllib.parse import parse_qs, urlparse

from .broker import (AuthError, Broker, ChannelNotFound, RateLimitPolicy,
                     WriteRejected, MAX_FIELDS)
from .clock import SimClock

ADMIN_TOKEN_ENV = "FEEDERSIM_ADMIN_TOKEN"


class BrokerHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], broker: Broker, clock: SimClock,
                 admin_token: str | None = None,
                 config_payload: dict | None = None,
                 ui_dir: str | None = None):
        self.broker = broker
        self.clock = clock
        self.admin_token = admin_token or os.environ.get(ADMIN_TOKEN_ENV) or ""
        self.config_payload = config_payload
        self.ui_dir = ui_dir
        super().__init__(address, _Handler)

    @property
    def port(self) -> int:
        return self.server_address[1]


def start_http_server(broker: Broker, clock: SimClock, host: str = "127.0.0.1",
                      port: int = 0, admin_token: str | None = None,
                      config_payload: dict | None = None,
                      ui_dir: str | None = None) -> BrokerHTTPServer:
    """Bind and serve on a background thread; caller shuts down."""
    server = BrokerHTTPServer((host, port), broker, clock,
                              admin_token=admin_token,
                              config_payload=config_payload, ui_dir=ui_dir)
    thread = threading.Thread(target=lambda: server.serve_forever(poll_interval=0.05),
                              daemon=True)
    thread.start()
    return server


class _Handler(BaseHTTPRequestHandler):
    server: BrokerHTTPServer

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    # -- plumbing ----------------------------------------------------------

    def _send(self, code: int, body: bytes, content_type: str,
              extra_headers: dict[str, str] | None = None) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        for key, value in (extra_headers or {}).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(body)

    def _text(self, code: int, text: str,
              extra_headers: dict[str, str] | None = None) -> None:
        self._send(code, text.encode(), "text/plain; charset=utf-8", extra_headers)

    def _json(self, code: int, payload: Any) -> None:
        self._send(code, json.dumps(payload).encode(), "application/json")

    def _params(self) -> dict[str, str]:
        query = parse_qs(urlparse(self.path).query)
        return {k: v[0] for k, v in query.items()}

    # -- routes --------------------------------------------------------------

    def do_GET(self):
        path = urlparse(self.path).path
        try:
            if path == "/update":
                self._handle_update()
            elif path == "/channels":
                self._handle_list()
            elif path == "/config.json":
                self._handle_config()
            elif path.startswith("/channels/"):
                self._handle_channel_read(path)
            else:
                self._handle_static(path)
        except AuthError as err:
            self._text(401, str(err) or "unauthorized")
        except ChannelNotFound as err:
            self._text(404, str(err))
        except Exception as err:  # surface, don't kill the connection thread
            self._text(500, f"internal error: {err}")

    def do_POST(self):
        path = urlparse(self.path).path
        try:
            if path == "/channels":
                self._handle_create()
            else:
                self._text(404, "not found")
        except AuthError as err:
            self._text(401, str(err) or "unauthorized")
        except Exception as err:
            self._text(500, f"internal error: {err}")

    def _handle_update(self):
        params = self._params()
        key = params.get("api_key", "")
        fields: dict[int, Any] = {}
        for slot in range(1, MAX_FIELDS + 1):
            value = params.get(f"field{slot}")
            if value is not None:
                fields[slot] = value
        kwargs: dict[str, Any] = {"status": params.get("status")}
        try:
            for name in ("latitude", "longitude", "elevation"):
                if name in params:
                    kwargs[name] = float(params[name])
        except ValueError:
            self._text(400, "bad request: location fields must be numbers")
            return
        result = self.server.broker.write_update(key, fields,
                                                 now=self.server.clock.now, **kwargs)
        if isinstance(result, WriteRejected):
            if result.reason == "auth":
                self._text(401, "0")
            else:
                self._text(200, "0", {"Retry-After": _fmt_retry(result.retry_after)})
        else:
            self._text(200, str(result.entry_id))

    def _handle_channel_read(self, path: str):
        parts = path.strip("/").split("/")
        # channels/{id}/feeds/last.json or channels/{id}/feeds.json
        if len(parts) < 3 or not parts[1].isdigit():
            self._text(404, "not found")
            return
        channel_id = int(parts[1])
        params = self._params()
        read_key = params.get("api_key")
        broker = self.server.broker
        if parts[2:] == ["feeds", "last.json"]:
            entry = broker.read_last(channel_id, read_key)
            n_named = len(broker.channel_meta(channel_id, read_key)["field_names"])
            self._json(200, entry.to_api_dict(n_named) if entry else None)
        elif parts[2:] == ["feeds.json"]:
            try:
                since = int(params.get("since", 0))
            except ValueError:
                self._text(400, "bad request: since must be an integer")
                return
            entries = broker.read_feed(channel_id, read_key, since_entry_id=since)
            meta = broker.channel_meta(channel_id, read_key)
            n_named = len(meta["field_names"])
            self._json(200, {"channel": meta,
                             "feeds": [e.to_api_dict(n_named) for e in entries]})
        else:
            self._text(404, "not found")

    def _require_admin(self, params: dict[str, str]) -> None:
        token = params.get("api_key") or self.headers.get("X-Admin-Token") or ""
        if not self.server.admin_token or token != self.server.admin_token:
            raise AuthError("admin token required")

    def _handle_create(self):
        params = self._params()
        self._require_admin(params)
        length = int(self.headers.get("Content-Length", 0))
        try:
            doc = json.loads(self.rfile.read(length) or b"{}")
            name = doc["name"]
            field_names = doc.get("field_names", [])
            policy = None
            if "min_interval" in doc:
                policy = RateLimitPolicy(min_interval=float(doc["min_interval"]))
            location = tuple(doc["location"]) if doc.get("location") else None
            channel = self.server.broker.create_channel(
                name, field_names, location=location,
                status_note=doc.get("status_note"),
                public=bool(doc.get("public", False)),
                policy=policy, now=self.server.clock.now)
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as err:
            self._text(400, f"bad request: {err}")
            return
        self._json(201, channel.meta_dict(include_keys=True))

    def _handle_list(self):
        self._require_admin(self._params())
        self._json(200, self.server.broker.list_channels())

    def _handle_config(self):
        if self.server.config_payload is None:
            self._text(404, "no live configuration")
        else:
            self._json(200, self.server.config_payload)

    def _handle_static(self, path: str):
        ui_dir = self.server.ui_dir
        if ui_dir is None:
            self._text(404, "not found")
            return
        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(ui_dir, rel))
        if not full.startswith(os.path.realpath(ui_dir)) or not os.path.isfile(full):
            self._text(404, "not found")
            return
        ctype = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
            ".json": "application/json",
        }.get(os.path.splitext(full)[1], "application/octet-stream")
        with open(full, "rb") as fh:
            self._send(200, fh.read(), ctype)


def _fmt_retry(retry_after: float | None) -> str:
    if retry_after is None:
        return "0"
    # Exact float so clients can schedule precisely; int-second readers
    # still parse the leading digits.
    return f"{retry_after:.6f}".rstrip("0").rstrip(".")
