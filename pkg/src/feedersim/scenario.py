"""Declarative scenario scripts for headless and live runs.

A scenario is a JSON document of keyed sections plus a timed event list.
Everything is optional except ``duration``; omitted sections take the
model defaults. Example::

    {
      "name": "baseline",
      "duration": 120,
      "tick": 0.01,
      "seed": 42,
      "world": {"bowl_fill": 0.0, "hopper_g": [500, 500]},
      "geometry": {"d_empty": 0.12, "d_full": 0.04},
      "flow": {"full_open_g_per_s": 10.0, "bowl_capacity_g": 200.0},
      "ultrasonic": {"noise_enabled": false},
      "ir": {"range_max": 0.10},
      "controller": {"poll_interval": 15.0, "full_threshold": 0.045},
      "broker": {"min_interval": 15.0},
      "owner": {"selection": 1, "delay": 20.0},
      "events": [
        {"t": 0.0, "kind": "pet_arrives", "distance": 0.05},
        {"t": 60.0, "kind": "pet_leaves"}
      ]
    }

Event kinds: ``pet_arrives`` (optional ``distance``, default 0.05 m),
``pet_leaves``, ``broker_down``, ``broker_up``, ``owner_select``
(``selection`` 1 or 2 written to the AppChannel at ``t``). The ``owner``
section is the scripted owner agent: it answers the first notify with
``selection`` after ``delay`` seconds. Parse problems raise
:class:`ScenarioError` naming the offending field (or JSON line).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .firmware import SELECTION_FEED1, SELECTION_FEED2, ControllerConfig
from .sensors import IRConfig, UltrasonicConfig
from .world import BowlGeometry, FlowModel, WorldState

EVENT_KINDS = ("pet_arrives", "pet_leaves", "broker_down", "broker_up", "owner_select")


class ScenarioError(Exception):
    """A scenario file failed to parse or validate."""


@dataclass(frozen=True)
class OwnerRule:
    """Scripted stand-in for the human owner: one selection per notify."""

    selection: int
    delay: float = 0.0

    def __post_init__(self):
        if self.selection not in (SELECTION_FEED1, SELECTION_FEED2):
            raise ScenarioError(f"owner.selection: must be 1 or 2, got {self.selection}")
        if self.delay < 0:
            raise ScenarioError("owner.delay: must be >= 0")


@dataclass(frozen=True)
class ScenarioEvent:
    t: float
    kind: str
    data: dict = field(default_factory=dict)


@dataclass(frozen=True)
class WorldInit:
    bowl_fill: float = 0.0
    hopper_g: tuple[float, float] = (500.0, 500.0)
    pet_present: bool = False
    pet_distance: float = 1.0


@dataclass
class Scenario:
    duration: float
    tick: float = 0.01
    seed: int = 0
    name: str = "scenario"
    world: WorldInit = field(default_factory=WorldInit)
    geometry: BowlGeometry = field(default_factory=BowlGeometry)
    flow: FlowModel = field(default_factory=FlowModel)
    ultrasonic: UltrasonicConfig = field(default_factory=UltrasonicConfig)
    ir: IRConfig = field(default_factory=IRConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    min_interval: float = 15.0
    owner: OwnerRule | None = None
    events: list[ScenarioEvent] = field(default_factory=list)

    def __post_init__(self):
        if self.duration <= 0:
            raise ScenarioError("duration: must be positive")
        if self.tick <= 0:
            raise ScenarioError("tick: must be positive")
        self.events = sorted(self.events, key=lambda e: e.t)

    def make_world(self) -> WorldState:
        """Fresh world per run so a Scenario object can be reused."""
        return WorldState(
            geometry=dataclasses.replace(self.geometry),
            flow=dataclasses.replace(self.flow),
            bowl_fill=self.world.bowl_fill,
            hopper_mass=list(self.world.hopper_g),
            pet_present=self.world.pet_present,
            pet_distance=self.world.pet_distance,
        )

    def to_dict(self) -> dict:
        """Canonical dict form, embedded in run reports for provenance."""
        return {
            "name": self.name,
            "duration": self.duration,
            "tick": self.tick,
            "seed": self.seed,
            "world": dataclasses.asdict(self.world),
            "geometry": dataclasses.asdict(self.geometry),
            "flow": dataclasses.asdict(self.flow),
            "ultrasonic": dataclasses.asdict(self.ultrasonic),
            "ir": dataclasses.asdict(self.ir),
            "controller": dataclasses.asdict(self.controller),
            "broker": {"min_interval": self.min_interval},
            "owner": dataclasses.asdict(self.owner) if self.owner else None,
            "events": [{"t": e.t, "kind": e.kind, **e.data} for e in self.events],
        }


def _build(cls, data: dict, where: str):
    """Overlay a config dict onto a dataclass's defaults, strictly."""
    if not isinstance(data, dict):
        raise ScenarioError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ScenarioError(f"{where}.{sorted(unknown)[0]}: unknown key")
    try:
        return cls(**data)
    except (TypeError, ValueError) as err:
        raise ScenarioError(f"{where}: {err}") from err


def _parse_event(raw: dict, where: str) -> ScenarioEvent:
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where}: expected an object")
    data = dict(raw)
    try:
        t = float(data.pop("t"))
    except KeyError:
        raise ScenarioError(f"{where}.t: required") from None
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}.t: must be a number") from None
    if t < 0:
        raise ScenarioError(f"{where}.t: must be >= 0")
    kind = data.pop("kind", None)
    if kind not in EVENT_KINDS:
        raise ScenarioError(f"{where}.kind: expected one of {EVENT_KINDS}, got {kind!r}")
    if kind == "pet_arrives":
        distance = data.pop("distance", 0.05)
        if not isinstance(distance, (int, float)) or distance < 0:
            raise ScenarioError(f"{where}.distance: must be a non-negative number")
        extras = {"distance": float(distance)}
    elif kind == "owner_select":
        selection = data.pop("selection", None)
        if selection not in (SELECTION_FEED1, SELECTION_FEED2):
            raise ScenarioError(f"{where}.selection: must be 1 or 2")
        extras = {"selection": selection}
    else:
        extras = {}
    if data:
        raise ScenarioError(f"{where}.{sorted(data)[0]}: unknown key")
    return ScenarioEvent(t=t, kind=kind, data=extras)


def scenario_from_dict(doc: dict, name: str = "scenario") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("top level: expected an object")
    doc = dict(doc)
    known = {"name", "duration", "tick", "seed", "world", "geometry", "flow",
             "ultrasonic", "ir", "controller", "broker", "owner", "events"}
    unknown = set(doc) - known
    if unknown:
        raise ScenarioError(f"{sorted(unknown)[0]}: unknown key")

    if "duration" not in doc:
        raise ScenarioError("duration: required")

    world_raw = dict(doc.get("world", {}))
    if "hopper_g" in world_raw:
        hopper = world_raw["hopper_g"]
        if (not isinstance(hopper, list) or len(hopper) != 2
                or not all(isinstance(x, (int, float)) for x in hopper)):
            raise ScenarioError("world.hopper_g: expected two numbers")
        world_raw["hopper_g"] = (float(hopper[0]), float(hopper[1]))

    broker_raw = doc.get("broker", {})
    if not isinstance(broker_raw, dict) or set(broker_raw) - {"min_interval"}:
        raise ScenarioError("broker: expected an object with only min_interval")

    owner_raw = doc.get("owner")
    owner = _build(OwnerRule, owner_raw, "owner") if owner_raw is not None else None

    events_raw = doc.get("events", [])
    if not isinstance(events_raw, list):
        raise ScenarioError("events: expected an array")
    events = [_parse_event(e, f"events[{i}]") for i, e in enumerate(events_raw)]

    try:
        return Scenario(
            duration=float(doc["duration"]),
            tick=float(doc.get("tick", 0.01)),
            seed=int(doc.get("seed", 0)),
            name=str(doc.get("name", name)),
            world=_build(WorldInit, world_raw, "world"),
            geometry=_build(BowlGeometry, doc.get("geometry", {}), "geometry"),
            flow=_build(FlowModel, doc.get("flow", {}), "flow"),
            ultrasonic=_build(UltrasonicConfig, doc.get("ultrasonic", {}), "ultrasonic"),
            ir=_build(IRConfig, doc.get("ir", {}), "ir"),
            controller=_build(ControllerConfig, doc.get("controller", {}), "controller"),
            min_interval=float(broker_raw.get("min_interval", 15.0)),
            owner=owner,
            events=events,
        )
    except (TypeError, ValueError) as err:
        raise ScenarioError(str(err)) from err


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file; errors carry line or field names."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ScenarioError(f"{path}: {err.strerror or err}") from err
    except json.JSONDecodeError as err:
        raise ScenarioError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from err
    name = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return scenario_from_dict(doc, name=name)
