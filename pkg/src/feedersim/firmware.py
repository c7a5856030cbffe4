"""Device controller: the NodeMCU-style feeding state machine and its pins.

The control loop runs once per clock tick: sense (IR level, one ultrasonic
trigger/echo cycle), exchange with the cloud on a fixed cadence, feed
everything into the pure :func:`decide` step, then apply any commands to
the servo valves. Cloud I/O is synchronous within a tick, so responses are
always applied before the next decision.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

from .broker import WriteRejected
from .client import BrokerClient, BrokerUnreachable
from .clock import SimClock
from .sensors import IRConfig, Level, UltrasonicConfig, ir_read, trigger_measure
from .servo import Servo, servo_step
from .world import WorldState

# Owner selection wire encoding (AppChannel field1).
SELECTION_NONE = 0
SELECTION_FEED1 = 1
SELECTION_FEED2 = 2


class Phase(Enum):
    IDLE = "Idle"
    DETECTED = "Detected"
    AWAITING_CHOICE = "AwaitingChoice"
    DISPENSING = "Dispensing"
    BOWL_FULL = "BowlFull"


# Commands emitted by decide(): ("notify_owner",) | ("open_servo", i) | ("close_servos",)
Command = tuple


@dataclass(frozen=True)
class PinMap:
    """Wiring of the controller board, matching the feeder circuit."""

    echo: str = "D1"
    trig: str = "D2"
    servo1: str = "D3"
    servo2: str = "D4"
    ir_out: str = "D7"

    def __post_init__(self):
        pins = (self.echo, self.trig, self.servo1, self.servo2, self.ir_out)
        if len(set(pins)) != len(pins):
            raise ValueError("pin assignments must be distinct")


def decide(phase: Phase, feed_index: int | None, ir_detected: bool,
           bowl_full: bool, selection: int) -> tuple[Phase, int | None, tuple[Command, ...]]:
    """One step of the feeding flowchart; pure and total over all inputs.

    Unlisted input combinations hold the current state and emit nothing.
    Dispensing only ever starts from AwaitingChoice on a nonzero owner
    selection, and an already-full bowl is reported without dispensing.
    """
    if selection not in (SELECTION_NONE, SELECTION_FEED1, SELECTION_FEED2):
        raise ValueError(f"selection {selection!r} not in 0|1|2")
    if phase is Phase.IDLE:
        if ir_detected:
            return Phase.DETECTED, None, (("notify_owner",),)
    elif phase is Phase.DETECTED:
        if bowl_full:
            return Phase.BOWL_FULL, None, ()
        return Phase.AWAITING_CHOICE, None, ()
    elif phase is Phase.AWAITING_CHOICE:
        if selection != SELECTION_NONE:
            return Phase.DISPENSING, selection, (("open_servo", selection),)
    elif phase is Phase.DISPENSING:
        if bowl_full:
            return Phase.BOWL_FULL, None, (("close_servos",),)
        return Phase.DISPENSING, feed_index, ()
    elif phase is Phase.BOWL_FULL:
        if not ir_detected:
            return Phase.IDLE, None, ()
    return phase, None, ()  # hold; only DISPENSING carries a feed index


def encode_ir_fields(ir_detected: bool, distance_m: float) -> dict[int, Any]:
    """IR-channel wire encoding: field1 = presence bit, field2 = meters."""
    return {1: 1 if ir_detected else 0, 2: distance_m}


def decode_ir_fields(fields: dict[int, Any]) -> tuple[bool, float]:
    return bool(int(fields[1])), float(fields[2])


@dataclass
class ControllerConfig:
    """Timing and thresholds for the control loop.

    ``poll_interval`` paces both telemetry publishes and AppChannel polls,
    matching the cloud's 15 s update cadence. ``full_threshold`` is the
    surface distance at or below which the bowl counts as full; it must sit
    inside the bowl's geometric range. Selection encoding on the wire:
    0 = none, 1 = feed 1, 2 = feed 2.
    """

    poll_interval: float = 15.0
    full_threshold: float = 0.045   # m
    trigger_hold: float = 10e-6     # s the loop holds TRIG high each cycle
    sound_speed: float = 343.0      # m/s, the firmware's own conversion constant
    ir_active_low: bool = True

    def __post_init__(self):
        if self.poll_interval <= 0:
            raise ValueError("poll_interval must be positive")


@dataclass
class ControllerState:
    phase: Phase = Phase.IDLE
    feed_index: int | None = None          # valid iff phase is DISPENSING
    last_publish_at: float | None = None
    last_poll_at: float | None = None
    next_publish_at: float = 0.0
    next_poll_at: float = 0.0
    pending_selection: int = SELECTION_NONE
    pending_entry_id: int = 0
    consumed_entry_id: int = 0             # AppChannel entries at/below are spent
    last_distance: float | None = None


@dataclass
class TickResult:
    """What one control-loop pass saw and did; consumed by the harness."""

    now: float
    ir_detected: bool
    distance: float | None      # this tick's measurement, None on echo timeout
    bowl_full: bool
    phase: Phase
    feed_index: int | None
    selection: int
    commands: tuple[Command, ...]
    published: dict[int, Any] | None  # fields sent this tick, if any publish succeeded


class SimulatedPins:
    """In-process pin interface binding the firmware to the modeled parts.

    Reads dispatch on the wired pin id so miswiring fails loudly, the same
    way a wrong jumper would.
    """

    def __init__(self, pin_map: PinMap, world: WorldState,
                 ultrasonic: UltrasonicConfig, ir: IRConfig,
                 servos: tuple[Servo, Servo] | None = None,
                 rng: random.Random | None = None):
        self.pin_map = pin_map
        self.world = world
        self.ultrasonic = ultrasonic
        self.ir = ir
        self.servos = servos or (Servo(), Servo())
        self.rng = rng

    def read(self, pin: str) -> Level:
        if pin == self.pin_map.ir_out:
            return ir_read(self.ir, self.world.pet_present, self.world.pet_distance)
        raise ValueError(f"pin {pin} is not a readable input")

    def trigger_sonar(self, hold_s: float):
        """Drive TRIG for ``hold_s`` and time the ECHO pulse (sub-tick, analytic)."""
        return trigger_measure(self.ultrasonic, self.world.surface_distance(),
                               hold_s, rng=self.rng)

    def command_servo(self, index: int, target_deg: float) -> None:
        self.servos[index - 1].command(target_deg)

    def step_servos(self, dt: float) -> None:
        for servo in self.servos:
            servo_step(servo, dt)

    def servo_angles(self) -> tuple[float, float]:
        return (self.servos[0].angle, self.servos[1].angle)


class Controller:
    """Feeding controller bound to its pins, channels and clock."""

    def __init__(self, cfg: ControllerConfig, pins: SimulatedPins,
                 client: BrokerClient, ir_write_key: str,
                 app_channel_id: int, app_read_key: str,
                 clock: SimClock,
                 log: Callable[..., None] | None = None):
        geom = pins.world.geometry
        if not geom.d_full <= cfg.full_threshold < geom.d_empty:
            raise ValueError("full_threshold must lie in [d_full, d_empty)")
        self.cfg = cfg
        self.pins = pins
        self.client = client
        self.ir_write_key = ir_write_key
        self.app_channel_id = app_channel_id
        self.app_read_key = app_read_key
        self.clock = clock
        self.state = ControllerState()
        self._log = log or (lambda kind, **data: None)

    def tick(self) -> TickResult:
        """Sense, exchange with the cloud on cadence, decide, actuate."""
        st, cfg = self.state, self.cfg
        now = self.clock.now

        ir_level = self.pins.read(self.pins.pin_map.ir_out)
        detected_level = Level.LOW if cfg.ir_active_low else Level.HIGH
        ir_detected = ir_level == detected_level

        echo = self.pins.trigger_sonar(cfg.trigger_hold)
        if echo.is_pulse:
            distance = cfg.sound_speed * echo.pulse_width / 2.0
            st.last_distance = distance
            bowl_full = distance <= cfg.full_threshold
        else:
            # No measurement this tick: report nothing full, publish last known.
            distance = None
            bowl_full = False

        published = None
        if now >= st.next_publish_at:
            published = self._publish(now, ir_detected, distance)
        if now >= st.next_poll_at:
            self._poll(now)

        selection = st.pending_selection
        next_phase, next_feed, commands = decide(
            st.phase, st.feed_index, ir_detected, bowl_full, selection)
        if next_phase is not st.phase:
            self._log("phase", t=now, frm=st.phase.value, to=next_phase.value)
        st.phase, st.feed_index = next_phase, next_feed

        for command in commands:
            self._apply(command, now)
        self.pins.step_servos(self.clock.tick)

        return TickResult(now=now, ir_detected=ir_detected, distance=distance,
                          bowl_full=bowl_full, phase=st.phase,
                          feed_index=st.feed_index, selection=selection,
                          commands=commands, published=published)

    # -- cloud exchanges ---------------------------------------------------

    def _publish(self, now: float, ir_detected: bool,
                 distance: float | None) -> dict[int, Any] | None:
        st = self.state
        report_distance = distance if distance is not None else st.last_distance
        if report_distance is None:
            report_distance = 0.0  # nothing measured yet and echo timed out
        fields = encode_ir_fields(ir_detected, report_distance)
        try:
            result = self.client.write(self.ir_write_key, fields)
        except BrokerUnreachable:
            self._log("publish_unreachable", t=now)
            st.next_publish_at = now + self.cfg.poll_interval
            return None
        if isinstance(result, WriteRejected):
            if result.reason == "rate_limited":
                # Latest-wins buffering: try again as soon as the window opens.
                self._log("publish_rate_limited", t=now, retry_after=result.retry_after)
                st.next_publish_at = now + (result.retry_after or self.cfg.poll_interval)
            else:
                self._log("publish_auth_error", t=now)
                st.next_publish_at = now + self.cfg.poll_interval
            return None
        self._log("publish", t=now, entry_id=result.entry_id,
                  field1=fields[1], field2=fields[2])
        st.last_publish_at = now
        st.next_publish_at = now + self.cfg.poll_interval
        return fields

    def _poll(self, now: float) -> None:
        st = self.state
        try:
            entry = self.client.read_last(self.app_channel_id, self.app_read_key)
        except BrokerUnreachable:
            self._log("poll_unreachable", t=now)
            st.next_poll_at = now + self.cfg.poll_interval
            return
        st.last_poll_at = now
        st.next_poll_at = now + self.cfg.poll_interval
        if entry is not None and entry.entry_id > st.consumed_entry_id:
            selection = _parse_selection(entry.fields.get(1))
            st.pending_selection = selection
            st.pending_entry_id = entry.entry_id
            if selection != SELECTION_NONE:
                self._log("selection_seen", t=now, entry_id=entry.entry_id,
                          selection=selection)

    def _apply(self, command: Command, now: float) -> None:
        st = self.state
        kind = command[0]
        if kind == "notify_owner":
            self._log("notify", t=now)
        elif kind == "open_servo":
            index = command[1]
            self.pins.command_servo(index, 180.0)
            # Edge-triggered consumption: this entry cannot retrigger a feed.
            st.consumed_entry_id = max(st.consumed_entry_id, st.pending_entry_id)
            st.pending_selection = SELECTION_NONE
            self._log("open_servo", t=now, servo=index)
        elif kind == "close_servos":
            self.pins.command_servo(1, 0.0)
            self.pins.command_servo(2, 0.0)
            self._log("close_servos", t=now)
        else:
            raise ValueError(f"unknown command {command!r}")


def _parse_selection(raw: Any) -> int:
    try:
        value = int(raw)
    except (TypeError, ValueError):
        return SELECTION_NONE
    return value if value in (SELECTION_FEED1, SELECTION_FEED2) else SELECTION_NONE
