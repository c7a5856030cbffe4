"""Live mode: broker HTTP API plus a real-time device loop for the dashboard.

The same simulation engine as headless runs, paced against the wall clock:
virtual time advances tick by tick so that it tracks elapsed wall time
multiplied by the speed factor. The device loop talks to its own broker
over real HTTP (loopback), exactly as the dashboard does, so the wire API
is the only contract between the three parties.
"""

from __future__ import annotations

import logging
import random
import secrets
import signal
import threading
import time

from .broker import Broker, RateLimitPolicy
from .client import HttpBrokerClient
from .clock import SimClock
from .firmware import Controller, PinMap, SimulatedPins
from .harness import OwnerAgent, _apply_event
from .httpd import start_http_server
from .scenario import Scenario, ScenarioEvent
from .world import advance

log = logging.getLogger("feedersim.live")

DEFAULT_UI_POLL_PERIOD_S = 5.0


def default_live_scenario() -> Scenario:
    """A pet wanders in a few seconds after boot and stays."""
    return Scenario(duration=3600.0,
                    events=[ScenarioEvent(t=5.0, kind="pet_arrives",
                                          data={"distance": 0.05})])


def _find_or_create_channels(broker: Broker, clock: SimClock):
    by_name = {c["name"]: c for c in broker.list_channels()}
    if "IRCh" in by_name and "AppChannel" in by_name:
        ir = broker.channel(by_name["IRCh"]["id"])
        app = broker.channel(by_name["AppChannel"]["id"])
        return ir, app
    ir = broker.create_channel("IRCh", ["presence", "distance_m"], now=clock.now)
    app = broker.create_channel("AppChannel", ["selection"], now=clock.now)
    return ir, app


def serve_live(scenario: Scenario | None = None, bind: str = "127.0.0.1:8000",
               speed: float = 1.0, persist_path: str | None = None,
               ui_dir: str | None = None, admin_token: str | None = None,
               stop_event: threading.Event | None = None,
               install_signal_handler: bool = True,
               on_ready=None) -> None:
    """Run broker + device until SIGINT (or ``stop_event``); blocks.

    Channels are reused from a replayed persistence log when present, so a
    restart carries on with the same keys. ``speed`` compresses virtual
    time: at 60, the 15 s write window passes in 0.25 s of wall time.
    """
    if speed <= 0:
        raise ValueError("speed must be positive")
    scenario = scenario or default_live_scenario()
    host, _, port_s = bind.partition(":")
    port = int(port_s) if port_s else 8000

    rng_master = random.Random(scenario.seed)
    us_rng = random.Random(rng_master.getrandbits(64))
    broker_rng = random.Random(rng_master.getrandbits(64))

    clock = SimClock(scenario.tick)
    broker = Broker(policy=RateLimitPolicy(scenario.min_interval),
                    persist_path=persist_path, rng=broker_rng)
    ir_ch, app_ch = _find_or_create_channels(broker, clock)

    world = scenario.make_world()
    pins = SimulatedPins(PinMap(), world, scenario.ultrasonic, scenario.ir, rng=us_rng)

    admin_token = admin_token or secrets.token_hex(8)
    config_payload = {
        "channels": {
            "ir": {"id": ir_ch.id, "read_key": ir_ch.read_key,
                   "field_names": list(ir_ch.field_names)},
            "app": {"id": app_ch.id, "read_key": app_ch.read_key,
                    "write_key": app_ch.write_key,
                    "field_names": list(app_ch.field_names)},
        },
        "geometry": {"d_empty": world.geometry.d_empty,
                     "d_full": world.geometry.d_full},
        "controller": {"poll_interval": scenario.controller.poll_interval,
                       "full_threshold": scenario.controller.full_threshold},
        "broker": {"min_interval": scenario.min_interval},
        "ui_poll_period": DEFAULT_UI_POLL_PERIOD_S,
        "speed": speed,
        "tick": scenario.tick,
    }

    server = start_http_server(broker, clock, host=host, port=port,
                               admin_token=admin_token,
                               config_payload=config_payload, ui_dir=ui_dir)
    base_url = f"http://{host}:{server.port}"
    log.info("broker API listening on %s (admin token %s)", base_url, admin_token)
    if ui_dir:
        log.info("dashboard served from %s at %s/", ui_dir, base_url)
    if on_ready is not None:
        on_ready(server)

    client = HttpBrokerClient(base_url)

    def harness_log(kind, **data):
        log.info("%s %s", kind, data)
        if kind == "notify":
            owner.on_notify(data["t"])

    owner = OwnerAgent(scenario.owner, client, app_ch.write_key, harness_log)
    controller = Controller(scenario.controller, pins, client,
                            ir_ch.write_key, app_ch.id, app_ch.read_key,
                            clock, harness_log)

    stop = stop_event or threading.Event()
    if install_signal_handler:
        signal.signal(signal.SIGINT, lambda *_: stop.set())

    events = scenario.events
    ev_idx = 0
    t0 = time.monotonic()
    min_sleep = min(0.05, scenario.tick / speed)
    try:
        while not stop.is_set():
            target_virtual = (time.monotonic() - t0) * speed
            while clock.now < target_virtual and not stop.is_set():
                now = clock.now
                while ev_idx < len(events) and events[ev_idx].t <= now:
                    _apply_event(events[ev_idx], world, client, owner,
                                 harness_log, now)
                    ev_idx += 1
                owner.step(now)
                controller.tick()
                advance(world, clock, pins.servo_angles())
            stop.wait(min_sleep)
    finally:
        server.shutdown()
        broker.close()
        log.info("shut down cleanly; persistence log flushed")
