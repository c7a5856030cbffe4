"""SG-90 hobby servo with a slew-rate-limited horn.

The firmware commands a target angle; the horn chases it at the part's
rated speed (0.1 s per 60 degrees, i.e. 600 deg/s), so a 0-180 traversal
takes 0.3 s of virtual time.
"""

from __future__ import annotations

from dataclasses import dataclass

SG90_SLEW_DEG_PER_S = 600.0  # 60 degrees per 0.1 s


@dataclass
class Servo:
    angle: float = 0.0   # degrees, current horn position
    target: float = 0.0  # degrees, commanded position
    slew: float = SG90_SLEW_DEG_PER_S  # deg/s

    def __post_init__(self):
        for value in (self.angle, self.target):
            if not 0.0 <= value <= 180.0:
                raise ValueError("servo angles live in [0, 180]")
        if self.slew <= 0:
            raise ValueError("slew must be positive")

    def command(self, target: float) -> None:
        if not 0.0 <= target <= 180.0:
            raise ValueError("target outside [0, 180]")
        self.target = target


def servo_step(servo: Servo, dt: float) -> Servo:
    """Move the horn toward its target by at most slew * dt, clamping there."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    max_move = servo.slew * dt
    delta = servo.target - servo.angle
    if abs(delta) <= max_move:
        servo.angle = servo.target
    else:
        servo.angle += max_move if delta > 0 else -max_move
    return servo
