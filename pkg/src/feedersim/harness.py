"""Headless scenario runner: broker + world + firmware on one virtual clock.

Tick order is fixed and documented so runs are reproducible: scenario
events due at the current time are applied first, then the scripted owner
gets a chance to write, then the controller runs its loop, the tick's
telemetry is recorded, and finally the world integrates valve flow and the
clock steps. A 120 s scenario at the default 10 ms tick replays in well
under a second of wall time.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from typing import Any

from .broker import Broker, RateLimitPolicy, WriteRejected
from .client import BrokerUnreachable, LocalBrokerClient
from .clock import SimClock
from .firmware import (Controller, PinMap, Phase, SimulatedPins, TickResult)
from .scenario import OwnerRule, Scenario
from .world import advance

MASS_TOLERANCE_G = 1e-9

SERIES_COLUMNS = ("time", "fill", "distance", "phase", "field1", "field2", "selection")


@dataclass
class RunReport:
    """Everything observable about one scenario run."""

    scenario: dict
    seed: int
    events: list[dict] = field(default_factory=list)
    series: dict[str, list] = field(default_factory=lambda: {c: [] for c in SERIES_COLUMNS})
    summary: dict = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json_bytes(self) -> bytes:
        doc = {
            "scenario": self.scenario,
            "seed": self.seed,
            "events": self.events,
            "series": self.series,
            "summary": self.summary,
            "violations": self.violations,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()

    def first_event(self, kind: str) -> dict | None:
        for event in self.events:
            if event["kind"] == kind:
                return event
        return None


class OwnerAgent:
    """Plays the human: answers the first notify with a configured selection.

    Writes go through the same broker client as the device, so they are
    subject to the same rate limit and outage windows; a rejected write is
    retried when its window reopens.
    """

    def __init__(self, rule: OwnerRule | None, client: LocalBrokerClient,
                 app_write_key: str, log):
        self.rule = rule
        self.client = client
        self.app_write_key = app_write_key
        self._log = log
        self._pending: list[dict] = []  # {"selection": int, "due": float}
        self._notified = False

    def on_notify(self, t: float) -> None:
        if self.rule is not None and not self._notified:
            self._notified = True
            self._pending.append({"selection": self.rule.selection,
                                  "due": t + self.rule.delay})

    def schedule(self, selection: int, t: float) -> None:
        self._pending.append({"selection": selection, "due": t})

    def step(self, now: float) -> None:
        if not self._pending or now < self._pending[0]["due"]:
            return
        item = self._pending[0]
        try:
            result = self.client.write(self.app_write_key, {1: item["selection"]})
        except BrokerUnreachable:
            self._log("owner_write_unreachable", t=now, selection=item["selection"])
            item["due"] = now + 15.0
            return
        if isinstance(result, WriteRejected):
            retry = result.retry_after or 15.0
            self._log("owner_write_rate_limited", t=now,
                      selection=item["selection"], retry_after=retry)
            item["due"] = now + retry
            return
        self._log("owner_write", t=now, selection=item["selection"],
                  entry_id=result.entry_id)
        self._pending.pop(0)


def run_scenario(scenario: Scenario, broker: Broker | None = None,
                 persist_path: str | None = None) -> RunReport:
    """Run a scenario to completion and return its report.

    Pass ``broker`` to keep ownership of the broker instance (for
    durability experiments); otherwise one is built internally, persisted
    to ``persist_path`` if given, and closed at the end of the run.
    """
    rng_master = random.Random(scenario.seed)
    us_rng = random.Random(rng_master.getrandbits(64))
    broker_rng = random.Random(rng_master.getrandbits(64))

    clock = SimClock(scenario.tick)
    own_broker = broker is None
    if own_broker:
        broker = Broker(policy=RateLimitPolicy(scenario.min_interval),
                        persist_path=persist_path, rng=broker_rng)

    report = RunReport(scenario=scenario.to_dict(), seed=scenario.seed)

    owner_box: list[OwnerAgent] = []

    def log(kind: str, **data: Any) -> None:
        report.events.append({"kind": kind, **data})
        if kind == "notify" and owner_box:
            owner_box[0].on_notify(data["t"])

    ir_ch = broker.create_channel("IRCh", ["presence", "distance_m"], now=clock.now)
    app_ch = broker.create_channel("AppChannel", ["selection"], now=clock.now)

    world = scenario.make_world()
    pins = SimulatedPins(PinMap(), world, scenario.ultrasonic, scenario.ir, rng=us_rng)
    client = LocalBrokerClient(broker, clock)
    owner = OwnerAgent(scenario.owner, client, app_ch.write_key, log)
    owner_box.append(owner)
    controller = Controller(scenario.controller, pins, client,
                            ir_ch.write_key, app_ch.id, app_ch.read_key,
                            clock, log)

    initial_mass = world.total_mass_g
    last_published: dict[int, Any] | None = None
    n_ticks = round(scenario.duration / scenario.tick)
    ev_idx = 0
    events = scenario.events

    for _ in range(n_ticks):
        now = clock.now
        while ev_idx < len(events) and events[ev_idx].t <= now:
            _apply_event(events[ev_idx], world, client, owner, log, now)
            ev_idx += 1
        owner.step(now)
        result = controller.tick()
        if result.published is not None:
            last_published = result.published
        _record(report.series, result, world.bowl_fill, last_published)
        advance(world, clock, pins.servo_angles())

    _summarize(report, world, initial_mass, controller)
    if own_broker:
        broker.close()
    return report


def _apply_event(event, world, client, owner: OwnerAgent, log, now: float) -> None:
    log("scenario_event", t=now, event=event.kind, **event.data)
    if event.kind == "pet_arrives":
        world.pet_present = True
        world.pet_distance = event.data["distance"]
    elif event.kind == "pet_leaves":
        world.pet_present = False
    elif event.kind == "broker_down":
        client.down = True
    elif event.kind == "broker_up":
        client.down = False
    elif event.kind == "owner_select":
        owner.schedule(event.data["selection"], now)


def _record(series: dict[str, list], result: TickResult, fill: float,
            last_published: dict[int, Any] | None) -> None:
    series["time"].append(result.now)
    series["fill"].append(fill)
    series["distance"].append(result.distance)
    phase = result.phase.value
    if result.phase is Phase.DISPENSING and result.feed_index:
        phase = f"{phase}({result.feed_index})"
    series["phase"].append(phase)
    series["field1"].append(None if last_published is None else last_published[1])
    series["field2"].append(None if last_published is None else last_published[2])
    series["selection"].append(result.selection)


def _summarize(report: RunReport, world, initial_mass: float, controller) -> None:
    notify = report.first_event("notify")
    opened = report.first_event("open_servo")
    closed = report.first_event("close_servos")
    mass_error = abs(world.total_mass_g - initial_mass)
    report.summary = {
        "time_to_notify": notify["t"] if notify else None,
        "time_to_dispense": opened["t"] if opened else None,
        "dispense_stop": closed["t"] if closed else None,
        "final_fill": world.bowl_fill,
        "final_phase": controller.state.phase.value,
        "mass_error_g": mass_error,
        "publishes": sum(1 for e in report.events if e["kind"] == "publish"),
        "hopper_g": list(world.hopper_mass),
    }
    if mass_error > MASS_TOLERANCE_G:
        report.violations.append(
            f"mass balance error {mass_error:.3e} g exceeds {MASS_TOLERANCE_G} g")
    _audit_trace(report)


def _audit_trace(report: RunReport) -> None:
    """Every dispense must trace back to an owner selection seen on the channel."""
    seen: set[int] = set()
    for event in report.events:
        if event["kind"] == "selection_seen":
            seen.add(event["selection"])
        elif event["kind"] == "open_servo":
            if event["servo"] not in seen:
                report.violations.append(
                    f"servo {event['servo']} opened at t={event['t']} "
                    "without a prior owner selection")


def export_series(report: RunReport, path: str) -> None:
    """Write the tick series as diff-friendly CSV."""
    series = report.series
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SERIES_COLUMNS)
        for i in range(len(series["time"])):
            writer.writerow([_cell(series[c][i]) for c in SERIES_COLUMNS])


def _cell(value) -> str:
    if value is None:
        return ""
    return str(value)


def parse_series(path: str) -> dict[str, list]:
    """Inverse of :func:`export_series`: parse(export(r)) == r.series."""
    out: dict[str, list] = {c: [] for c in SERIES_COLUMNS}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != SERIES_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        for row in reader:
            cells = dict(zip(SERIES_COLUMNS, row))
            out["time"].append(float(cells["time"]))
            out["fill"].append(float(cells["fill"]))
            out["distance"].append(float(cells["distance"]) if cells["distance"] else None)
            out["phase"].append(cells["phase"])
            out["field1"].append(int(cells["field1"]) if cells["field1"] else None)
            out["field2"].append(float(cells["field2"]) if cells["field2"] else None)
            out["selection"].append(int(cells["selection"]))
    return out
