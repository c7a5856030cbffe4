"""Behavioral models of the HC-SR04 ultrasonic ranger and the IR proximity module.

Both are pure functions over value types: feed in a true distance, get back
what the part's pins would show. Out-of-range measurements come back as a
timeout value, never as a fault.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

SPEED_OF_SOUND_M_S = 343.0  # dry air at 20 C


class Level(enum.IntEnum):
    """Digital logic level on a pin."""

    LOW = 0
    HIGH = 1


@dataclass
class UltrasonicConfig:
    """HC-SR04 datasheet constants.

    The practical 2-80 cm window is enforced; the theoretical 450 cm bound
    and the <15 degree beam angle are recorded but not modeled (the world
    is one-dimensional).
    """

    speed_of_sound: float = SPEED_OF_SOUND_M_S  # m/s
    min_range: float = 0.02      # m
    max_range: float = 0.80      # m
    accuracy: float = 0.003      # m, half-width of the noise band
    trigger_min: float = 10e-6   # s the TRIG pin must be held high
    beam_angle_deg: float = 15.0  # informational only
    noise_enabled: bool = False

    def __post_init__(self):
        if not 0 < self.min_range < self.max_range:
            raise ValueError("require 0 < min_range < max_range")
        if self.accuracy <= 0 or self.trigger_min <= 0:
            raise ValueError("accuracy and trigger_min must be positive")


@dataclass(frozen=True)
class EchoResult:
    """Width of the ECHO pin's high pulse, or a timeout when no echo came back."""

    kind: str  # "pulse" | "timeout"
    pulse_width: float | None = None  # seconds, present iff kind == "pulse"

    @property
    def is_pulse(self) -> bool:
        return self.kind == "pulse"


TIMEOUT = EchoResult(kind="timeout")


def trigger_measure(cfg: UltrasonicConfig, true_distance: float,
                    trigger_hold: float, rng: random.Random | None = None) -> EchoResult:
    """Run one trigger/echo cycle against a target at ``true_distance``.

    A trigger held for less than ``cfg.trigger_min`` never starts a
    measurement. Targets outside the practical window produce no echo.
    Otherwise the echo pulse width is the round-trip time 2*d/c, with
    uniform noise of +-accuracy (in distance terms) when enabled.
    """
    if trigger_hold < 0:
        raise ValueError("trigger_hold must be >= 0")
    if trigger_hold < cfg.trigger_min:
        return TIMEOUT
    if not cfg.min_range <= true_distance <= cfg.max_range:
        return TIMEOUT
    width = 2.0 * true_distance / cfg.speed_of_sound
    if cfg.noise_enabled:
        if rng is None:
            raise ValueError("noise_enabled requires an rng for determinism")
        width += rng.uniform(-1.0, 1.0) * 2.0 * cfg.accuracy / cfg.speed_of_sound
    return EchoResult(kind="pulse", pulse_width=width)


def pulse_to_distance(cfg: UltrasonicConfig, pulse_width: float) -> float:
    """Distance = (speed of sound * echo high time) / 2."""
    if pulse_width < 0:
        raise ValueError("pulse_width must be >= 0")
    return cfg.speed_of_sound * pulse_width / 2.0


@dataclass
class IRConfig:
    """Reflective IR proximity module (LM393 comparator board).

    Active-low: OUT is driven LOW while an obstacle sits inside the
    detection window. The window's far edge is potentiometer-adjustable on
    the real part, hence configurable here. The 35 degree detection cone is
    recorded but not enforced in this 1-D world.
    """

    range_min: float = 0.02      # m
    range_max: float = 0.10      # m
    half_angle_deg: float = 35.0  # informational only
    active_low: bool = True

    def __post_init__(self):
        if not 0 < self.range_min < self.range_max:
            raise ValueError("require 0 < range_min < range_max")


def ir_read(cfg: IRConfig, present: bool, distance: float) -> Level:
    """Logic level on the module's OUT pin for a target at ``distance``."""
    if distance < 0:
        raise ValueError("distance must be >= 0")
    detected = present and cfg.range_min <= distance <= cfg.range_max
    if cfg.active_low:
        return Level.LOW if detected else Level.HIGH
    return Level.HIGH if detected else Level.LOW
