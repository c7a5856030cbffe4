"""Broker clients used by the device firmware and the scripted owner agent.

Both implementations expose the same operations as the HTTP wire API:
``write`` maps to GET /update, ``read_last`` to /feeds/last.json and
``read_feed`` to /feeds.json. Headless runs bind directly to an in-process
broker on the shared virtual clock; live runs go over real HTTP. Transport
failures surface as :class:`BrokerUnreachable` either way, so the firmware
cannot tell the difference.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.parse
import urllib.request
from typing import Any, Protocol

from .broker import Broker, FeedEntry, WriteAccepted, WriteRejected
from .clock import SimClock


class BrokerUnreachable(Exception):
    """The broker could not be reached; retry at the next poll window."""


class BrokerClient(Protocol):
    def write(self, write_key: str, fields: dict[int, Any],
              status: str | None = None) -> WriteAccepted | WriteRejected: ...

    def read_last(self, channel_id: int, read_key: str | None) -> FeedEntry | None: ...

    def read_feed(self, channel_id: int, read_key: str | None,
                  since_entry_id: int = 0) -> list[FeedEntry]: ...


class LocalBrokerClient:
    """Direct binding to an in-process broker, timestamping from the sim clock.

    ``down`` simulates an outage window: every call raises
    :class:`BrokerUnreachable` while it is set.
    """

    def __init__(self, broker: Broker, clock: SimClock):
        self.broker = broker
        self.clock = clock
        self.down = False

    def _check_up(self) -> None:
        if self.down:
            raise BrokerUnreachable("scripted outage")

    def write(self, write_key: str, fields: dict[int, Any],
              status: str | None = None) -> WriteAccepted | WriteRejected:
        self._check_up()
        return self.broker.write_update(write_key, fields, now=self.clock.now,
                                        status=status)

    def read_last(self, channel_id: int, read_key: str | None) -> FeedEntry | None:
        self._check_up()
        return self.broker.read_last(channel_id, read_key)

    def read_feed(self, channel_id: int, read_key: str | None,
                  since_entry_id: int = 0) -> list[FeedEntry]:
        self._check_up()
        return self.broker.read_feed(channel_id, read_key, since_entry_id)


class HttpBrokerClient:
    """Talks the ThingSpeak-shaped wire API over HTTP.

    ``down`` mirrors the local client's scripted-outage switch so live runs
    can replay the same outage events a headless scenario uses.
    """

    def __init__(self, base_url: str, timeout: float = 5.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.down = False

    def _get(self, path: str, params: dict[str, Any]) -> tuple[int, dict[str, str], bytes]:
        if self.down:
            raise BrokerUnreachable("scripted outage")
        url = f"{self.base_url}{path}?{urllib.parse.urlencode(params)}"
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                return resp.status, dict(resp.headers), resp.read()
        except urllib.error.HTTPError as err:
            return err.code, dict(err.headers), err.read()
        except (urllib.error.URLError, OSError, TimeoutError) as err:
            raise BrokerUnreachable(str(err)) from err

    def write(self, write_key: str, fields: dict[int, Any],
              status: str | None = None) -> WriteAccepted | WriteRejected:
        params: dict[str, Any] = {"api_key": write_key}
        for slot, value in fields.items():
            params[f"field{slot}"] = value
        if status is not None:
            params["status"] = status
        code, headers, body = self._get("/update", params)
        if code == 401:
            return WriteRejected(reason="auth")
        text = body.decode().strip()
        if text == "0":
            retry_after = headers.get("Retry-After")
            return WriteRejected(reason="rate_limited",
                                 retry_after=float(retry_after) if retry_after else None)
        return WriteAccepted(entry_id=int(text))

    def read_last(self, channel_id: int, read_key: str | None) -> FeedEntry | None:
        params = {"api_key": read_key} if read_key else {}
        code, _, body = self._get(f"/channels/{channel_id}/feeds/last.json", params)
        self._raise_for_read(code, body)
        payload = json.loads(body)
        return _entry_from_api(payload) if payload is not None else None

    def read_feed(self, channel_id: int, read_key: str | None,
                  since_entry_id: int = 0) -> list[FeedEntry]:
        params: dict[str, Any] = {"since": since_entry_id}
        if read_key:
            params["api_key"] = read_key
        code, _, body = self._get(f"/channels/{channel_id}/feeds.json", params)
        self._raise_for_read(code, body)
        payload = json.loads(body)
        return [_entry_from_api(e) for e in payload["feeds"]]

    @staticmethod
    def _raise_for_read(code: int, body: bytes) -> None:
        from .broker import AuthError, ChannelNotFound

        if code == 401:
            raise AuthError(body.decode(errors="replace"))
        if code == 404:
            raise ChannelNotFound(body.decode(errors="replace"))
        if code >= 500:
            raise BrokerUnreachable(f"server error {code}")


def _entry_from_api(payload: dict) -> FeedEntry:
    fields = {}
    for key, value in payload.items():
        if key.startswith("field") and key[5:].isdigit() and value is not None:
            fields[int(key[5:])] = value
    return FeedEntry(
        entry_id=payload["entry_id"],
        created_at=payload["created_at"],
        fields=fields,
        status=payload.get("status"),
        latitude=payload.get("latitude"),
        longitude=payload.get("longitude"),
        elevation=payload.get("elevation"),
    )
