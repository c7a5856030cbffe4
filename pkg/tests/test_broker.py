"""Channel store: auth, rate limiting, log immutability, persistence."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from feedersim import (AuthError, Broker, ChannelNotFound, RateLimitPolicy,
                       WriteAccepted, WriteRejected)


def make_broker(min_interval=15.0, **kwargs) -> Broker:
    return Broker(policy=RateLimitPolicy(min_interval), **kwargs)


class TestCreateChannel:
    def test_two_field_channel(self):
        broker = make_broker()
        ch = broker.create_channel("IRCh", ["presence", "distance_m"])
        assert ch.id == 1
        assert ch.field_names == ["presence", "distance_m"]
        assert ch.write_key != ch.read_key
        assert broker.read_last(ch.id, ch.read_key) is None

    def test_single_field_channel(self):
        ch = make_broker().create_channel("AppChannel", ["selection"])
        assert len(ch.field_names) == 1

    def test_nine_fields_rejected(self):
        with pytest.raises(ValueError, match="at most 8"):
            make_broker().create_channel("X", [f"f{i}" for i in range(9)])

    def test_ids_unique_and_sequential(self):
        broker = make_broker()
        ids = [broker.create_channel(f"c{i}", []).id for i in range(5)]
        assert ids == [1, 2, 3, 4, 5]

    def test_location_and_status_stored(self):
        ch = make_broker().create_channel(
            "geo", ["v"], location=(17.4, 78.5, 505.0), status_note="roof unit")
        assert ch.location == (17.4, 78.5, 505.0)
        assert ch.status_note == "roof unit"


class TestWriteUpdate:
    def test_first_write_gets_entry_one(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        result = broker.write_update(ch.write_key, {1: 3.5}, now=0.0)
        assert isinstance(result, WriteAccepted) and result.entry_id == 1

    def test_window_rejection_carries_retry_after(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        broker.write_update(ch.write_key, {1: 1}, now=0.0)
        result = broker.write_update(ch.write_key, {1: 2}, now=10.0)
        assert isinstance(result, WriteRejected)
        assert result.reason == "rate_limited"
        assert result.retry_after == pytest.approx(5.0, abs=1e-9)

    def test_boundary_write_accepted_at_exactly_the_interval(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        broker.write_update(ch.write_key, {1: 1}, now=0.0)
        broker.write_update(ch.write_key, {1: 2}, now=10.0)  # rejected
        result = broker.write_update(ch.write_key, {1: 3}, now=15.0)
        assert isinstance(result, WriteAccepted) and result.entry_id == 2

    def test_rejection_never_mutates_state(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        broker.write_update(ch.write_key, {1: 1}, now=0.0)
        before = broker.dump_state()
        broker.write_update(ch.write_key, {1: 2}, now=3.0)
        assert broker.dump_state() == before

    def test_bad_key_rejected_as_auth(self):
        broker = make_broker()
        broker.create_channel("c", ["v"])
        result = broker.write_update("WRONGKEY", {1: 1}, now=0.0)
        assert isinstance(result, WriteRejected) and result.reason == "auth"

    def test_read_key_cannot_write(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        result = broker.write_update(ch.read_key, {1: 1}, now=0.0)
        assert isinstance(result, WriteRejected) and result.reason == "auth"

    def test_field_slot_bounds(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        with pytest.raises(ValueError):
            broker.write_update(ch.write_key, {9: 1}, now=0.0)

    def test_status_and_location_per_entry(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        broker.write_update(ch.write_key, {1: 1}, now=0.0,
                            status="ok", latitude=17.4, longitude=78.5)
        entry = broker.read_last(ch.id, ch.read_key)
        assert entry.status == "ok" and entry.latitude == 17.4


class TestReads:
    def test_read_last_returns_latest(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        broker.write_update(ch.write_key, {1: 1}, now=0.0)
        broker.write_update(ch.write_key, {1: 2}, now=15.0)
        assert broker.read_last(ch.id, ch.read_key).entry_id == 2

    def test_wrong_read_key_raises(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        with pytest.raises(AuthError):
            broker.read_last(ch.id, "NOPE")
        with pytest.raises(AuthError):
            broker.read_last(ch.id, ch.write_key)  # wrong key class

    def test_unknown_channel_raises(self):
        with pytest.raises(ChannelNotFound):
            make_broker().read_last(99, "KEY")

    def test_public_channel_reads_without_key(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"], public=True)
        assert broker.read_last(ch.id) is None

    def test_read_feed_since(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        for i in range(4):
            broker.write_update(ch.write_key, {1: i}, now=15.0 * i)
        assert [e.entry_id for e in broker.read_feed(ch.id, ch.read_key)] == [1, 2, 3, 4]
        assert [e.entry_id for e in broker.read_feed(ch.id, ch.read_key, since_entry_id=2)] == [3, 4]
        assert broker.read_feed(ch.id, ch.read_key, since_entry_id=4) == []

    def test_snapshots_do_not_alias_internal_state(self):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        broker.write_update(ch.write_key, {1: 1}, now=0.0)
        entry = broker.read_last(ch.id, ch.read_key)
        entry.fields[1] = 999
        assert broker.read_last(ch.id, ch.read_key).fields[1] == 1


def test_interleaved_writers_stay_isolated():
    # Randomized interleaving across two channels; each log must contain
    # exactly its own writes, in order.
    rng = random.Random(1234)
    broker = make_broker(min_interval=1.0)
    a = broker.create_channel("A", ["v"])
    b = broker.create_channel("B", ["v"])
    sent = {a.id: [], b.id: []}
    now = 0.0
    for i in range(200):
        ch = a if rng.random() < 0.5 else b
        now += rng.choice([0.4, 1.0, 1.7])
        result = broker.write_update(ch.write_key, {1: i}, now=now)
        if isinstance(result, WriteAccepted):
            sent[ch.id].append(i)
    for ch in (a, b):
        got = [e.fields[1] for e in broker.read_feed(ch.id, ch.read_key)]
        assert got == sent[ch.id]


class TestRateLimitProperty:
    @settings(max_examples=200, deadline=None)
    @given(gaps=st.lists(st.floats(min_value=0.0, max_value=40.0), min_size=1, max_size=40))
    def test_accepted_writes_spaced_by_min_interval(self, gaps):
        broker = make_broker()
        ch = broker.create_channel("c", ["v"])
        now, accepted = 0.0, []
        for i, gap in enumerate(gaps):
            now += gap
            result = broker.write_update(ch.write_key, {1: i}, now=now)
            if isinstance(result, WriteAccepted):
                accepted.append(now)
            else:
                assert result.retry_after == pytest.approx(
                    15.0 - (now - accepted[-1]), abs=1e-9)
        assert all(b - a >= 15.0 - 1e-9 for a, b in zip(accepted, accepted[1:]))
        # Log immutability: ids are a bijection with append order.
        ids = [e.entry_id for e in broker.read_feed(ch.id, ch.read_key)]
        assert ids == list(range(1, len(accepted) + 1))
        stamps = [e.created_at for e in broker.read_feed(ch.id, ch.read_key)]
        assert stamps == accepted


class TestPersistence:
    def test_replay_reconstructs_identical_state(self, tmp_path):
        path = str(tmp_path / "broker.jsonl")
        broker = make_broker(persist_path=path, rng=random.Random(7))
        ch = broker.create_channel("c", ["v1", "v2"], status_note="note")
        broker.write_update(ch.write_key, {1: 1.5, 2: "txt"}, now=0.0, status="s")
        broker.write_update(ch.write_key, {1: 2.5}, now=15.0)
        dump = broker.dump_state()
        broker.close()

        replayed = make_broker(persist_path=path)
        assert replayed.dump_state() == dump
        replayed.close()

    def test_replay_then_continue_appending(self, tmp_path):
        path = str(tmp_path / "broker.jsonl")
        broker = make_broker(persist_path=path, rng=random.Random(7))
        ch = broker.create_channel("c", ["v"])
        broker.write_update(ch.write_key, {1: 1}, now=0.0)
        broker.close()

        again = make_broker(persist_path=path)
        result = again.write_update(ch.write_key, {1: 2}, now=15.0)
        assert isinstance(result, WriteAccepted) and result.entry_id == 2
        # Rate limit state survives the restart too.
        rejected = again.write_update(ch.write_key, {1: 3}, now=16.0)
        assert isinstance(rejected, WriteRejected)
        again.close()

    def test_torn_tail_is_discarded(self, tmp_path):
        path = str(tmp_path / "broker.jsonl")
        broker = make_broker(persist_path=path, rng=random.Random(7))
        ch = broker.create_channel("c", ["v"])
        broker.write_update(ch.write_key, {1: 1}, now=0.0)
        dump = broker.dump_state()
        broker.close()
        with open(path, "a", encoding="utf-8") as fh:
            fh.write('{"op":"entry","chan')  # crash mid-append
        replayed = make_broker(persist_path=path)
        assert replayed.dump_state() == dump
        replayed.close()

    def test_no_persistence_means_no_file(self, tmp_path):
        broker = make_broker()
        broker.create_channel("c", ["v"])
        broker.close()
        assert list(tmp_path.iterdir()) == []


def test_seeded_rng_gives_reproducible_keys():
    b1 = Broker(rng=random.Random(42))
    b2 = Broker(rng=random.Random(42))
    c1 = b1.create_channel("c", ["v"])
    c2 = b2.create_channel("c", ["v"])
    assert (c1.write_key, c1.read_key) == (c2.write_key, c2.read_key)
