"""Wire contract of the broker's HTTP face, exercised over real sockets."""

import json
import urllib.error
import urllib.request

import pytest

from feedersim import Broker, HttpBrokerClient, RateLimitPolicy, SimClock, WriteAccepted, WriteRejected
from feedersim.httpd import start_http_server

ADMIN = "TESTADMINTOKEN"


@pytest.fixture
def server():
    clock = SimClock()
    broker = Broker(policy=RateLimitPolicy(15.0))
    srv = start_http_server(broker, clock, port=0, admin_token=ADMIN,
                            config_payload={"ui_poll_period": 5.0})
    srv.clock = clock
    yield srv
    srv.shutdown()
    broker.close()


def fetch(url: str):
    try:
        with urllib.request.urlopen(url, timeout=5.0) as resp:
            return resp.status, dict(resp.headers), resp.read()
    except urllib.error.HTTPError as err:
        return err.code, dict(err.headers), err.read()


def post(url: str, payload: dict):
    req = urllib.request.Request(url, data=json.dumps(payload).encode(),
                                 headers={"Content-Type": "application/json"},
                                 method="POST")
    try:
        with urllib.request.urlopen(req, timeout=5.0) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, err.read().decode()


def create_channel(server, name="c", fields=("v1", "v2"), **extra):
    code, body = post(f"http://127.0.0.1:{server.port}/channels?api_key={ADMIN}",
                      {"name": name, "field_names": list(fields), **extra})
    assert code == 201, body
    return body


class TestChannelAdmin:
    def test_create_returns_keys(self, server):
        body = create_channel(server)
        assert body["id"] == 1
        assert len(body["write_key"]) == 16 and len(body["read_key"]) == 16

    def test_create_requires_admin_token(self, server):
        code, _ = post(f"http://127.0.0.1:{server.port}/channels?api_key=WRONG",
                       {"name": "c", "field_names": []})
        assert code == 401

    def test_create_rejects_nine_fields(self, server):
        code, body = post(
            f"http://127.0.0.1:{server.port}/channels?api_key={ADMIN}",
            {"name": "c", "field_names": [f"f{i}" for i in range(9)]})
        assert code == 400 and "8" in body

    def test_list_channels(self, server):
        create_channel(server, name="one")
        create_channel(server, name="two")
        code, _, body = fetch(f"http://127.0.0.1:{server.port}/channels?api_key={ADMIN}")
        assert code == 200
        assert [c["name"] for c in json.loads(body)] == ["one", "two"]


class TestUpdateEndpoint:
    def test_accepted_write_returns_entry_id(self, server):
        ch = create_channel(server)
        code, _, body = fetch(
            f"http://127.0.0.1:{server.port}/update?api_key={ch['write_key']}&field1=1&field2=0.08")
        assert code == 200 and body == b"1"

    def test_rate_limited_write_returns_zero_with_retry_after(self, server):
        ch = create_channel(server)
        url = f"http://127.0.0.1:{server.port}/update?api_key={ch['write_key']}&field1=1"
        fetch(url)
        code, headers, body = fetch(url)
        assert code == 200 and body == b"0"
        assert float(headers["Retry-After"]) == pytest.approx(15.0, abs=0.01)

    def test_bad_key_is_401_zero(self, server):
        code, _, body = fetch(f"http://127.0.0.1:{server.port}/update?api_key=NOPE&field1=1")
        assert code == 401 and body == b"0"

    def test_virtual_clock_governs_rate_limit(self, server):
        ch = create_channel(server)
        url = f"http://127.0.0.1:{server.port}/update?api_key={ch['write_key']}&field1=1"
        fetch(url)
        for _ in range(1500):
            server.clock.advance()  # 15 s of virtual time, instantly
        code, _, body = fetch(url)
        assert code == 200 and body == b"2"


class TestFeedEndpoints:
    def test_last_json_round_trip(self, server):
        ch = create_channel(server)
        fetch(f"http://127.0.0.1:{server.port}/update?api_key={ch['write_key']}"
              "&field1=1&field2=0.08&status=hello")
        code, _, body = fetch(
            f"http://127.0.0.1:{server.port}/channels/{ch['id']}/feeds/last.json"
            f"?api_key={ch['read_key']}")
        assert code == 200
        entry = json.loads(body)
        assert entry["entry_id"] == 1
        assert entry["field1"] == "1" and entry["field2"] == "0.08"
        assert entry["status"] == "hello"
        assert entry["created_at"] == 0.0

    def test_last_json_empty_channel_is_null(self, server):
        ch = create_channel(server)
        code, _, body = fetch(
            f"http://127.0.0.1:{server.port}/channels/{ch['id']}/feeds/last.json"
            f"?api_key={ch['read_key']}")
        assert code == 200 and json.loads(body) is None

    def test_feeds_json_since(self, server):
        ch = create_channel(server)
        url = f"http://127.0.0.1:{server.port}/update?api_key={ch['write_key']}&field1=7"
        fetch(url)
        for _ in range(1500):
            server.clock.advance()
        fetch(url)
        code, _, body = fetch(
            f"http://127.0.0.1:{server.port}/channels/{ch['id']}/feeds.json"
            f"?api_key={ch['read_key']}&since=1")
        payload = json.loads(body)
        assert code == 200
        assert payload["channel"]["name"] == "c"
        assert [e["entry_id"] for e in payload["feeds"]] == [2]

    def test_wrong_read_key_is_401(self, server):
        ch = create_channel(server)
        code, _, _ = fetch(
            f"http://127.0.0.1:{server.port}/channels/{ch['id']}/feeds/last.json?api_key=X")
        assert code == 401

    def test_unknown_channel_is_404(self, server):
        code, _, _ = fetch(
            f"http://127.0.0.1:{server.port}/channels/42/feeds/last.json?api_key=X")
        assert code == 404

    def test_cors_header_present(self, server):
        _, headers, _ = fetch(f"http://127.0.0.1:{server.port}/config.json")
        assert headers["Access-Control-Allow-Origin"] == "*"


class TestHttpBrokerClient:
    def test_full_round_trip(self, server):
        ch = create_channel(server)
        client = HttpBrokerClient(f"http://127.0.0.1:{server.port}")
        result = client.write(ch["write_key"], {1: 1, 2: 0.08})
        assert isinstance(result, WriteAccepted) and result.entry_id == 1
        rejected = client.write(ch["write_key"], {1: 0})
        assert isinstance(rejected, WriteRejected)
        assert rejected.retry_after == pytest.approx(15.0, abs=0.01)
        entry = client.read_last(ch["id"], ch["read_key"])
        assert entry.entry_id == 1 and entry.fields[1] == "1"
        feed = client.read_feed(ch["id"], ch["read_key"])
        assert [e.entry_id for e in feed] == [1]

    def test_unreachable_raises(self):
        from feedersim import BrokerUnreachable
        client = HttpBrokerClient("http://127.0.0.1:9", timeout=0.3)
        with pytest.raises(BrokerUnreachable):
            client.read_last(1, "K")

    def test_config_endpoint(self, server):
        code, _, body = fetch(f"http://127.0.0.1:{server.port}/config.json")
        assert code == 200 and json.loads(body)["ui_poll_period"] == 5.0
