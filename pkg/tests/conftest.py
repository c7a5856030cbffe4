"""Shared wiring for controller-level tests."""

from dataclasses import dataclass, field

import pytest

from feedersim import (Broker, Controller, ControllerConfig, IRConfig,
                       LocalBrokerClient, PinMap, RateLimitPolicy, SimClock,
                       SimulatedPins, UltrasonicConfig, WorldState, advance)


@dataclass
class Rig:
    """Broker + world + controller on one virtual clock, stepped by hand."""

    clock: SimClock
    world: WorldState
    broker: Broker
    client: LocalBrokerClient
    pins: SimulatedPins
    controller: Controller
    ir_channel: object
    app_channel: object
    events: list = field(default_factory=list)

    def step(self, n: int = 1):
        last = None
        for _ in range(n):
            last = self.controller.tick()
            advance(self.world, self.clock, self.pins.servo_angles())
        return last

    def step_until(self, predicate, limit: int = 100_000):
        for _ in range(limit):
            result = self.step()
            if predicate(result):
                return result
        raise AssertionError("predicate never satisfied")

    def events_of(self, kind: str) -> list:
        return [e for e in self.events if e["kind"] == kind]


def build_rig(world: WorldState | None = None,
              cfg: ControllerConfig | None = None,
              min_interval: float = 15.0,
              tick: float = 0.01) -> Rig:
    clock = SimClock(tick=tick)
    world = world or WorldState()
    broker = Broker(policy=RateLimitPolicy(min_interval))
    ir_ch = broker.create_channel("IRCh", ["presence", "distance_m"], now=clock.now)
    app_ch = broker.create_channel("AppChannel", ["selection"], now=clock.now)
    client = LocalBrokerClient(broker, clock)
    pins = SimulatedPins(PinMap(), world, UltrasonicConfig(), IRConfig())
    events: list = []

    def log(kind, **data):
        events.append({"kind": kind, **data})

    controller = Controller(cfg or ControllerConfig(), pins, client,
                            ir_ch.write_key, app_ch.id, app_ch.read_key,
                            clock, log)
    return Rig(clock=clock, world=world, broker=broker, client=client,
               pins=pins, controller=controller, ir_channel=ir_ch,
               app_channel=app_ch, events=events)


@pytest.fixture
def rig() -> Rig:
    return build_rig()
