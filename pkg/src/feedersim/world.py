"""Ground-truth physics: bowl fill, hopper masses, pet position.

The world is the single source of truth that the simulated sensors observe
and the servo valves mutate. Food only flows downward (hopper -> bowl); pet
consumption is not modeled, so fill never decreases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .clock import SimClock

FULL_OPEN_DEG = 180.0


@dataclass
class BowlGeometry:
    """Linear map between bowl fill fraction and ultrasonic surface distance.

    Defaults put both endpoints inside the HC-SR04 practical window
    (2-80 cm) so an empty and a full bowl are both measurable.
    """

    d_empty: float = 0.12  # m, sensor face to bowl bottom contents when empty
    d_full: float = 0.04   # m, sensor face to contents when full

    def __post_init__(self):
        if not 0 < self.d_full < self.d_empty:
            raise ValueError("require 0 < d_full < d_empty")

    def distance_for_fill(self, fill: float) -> float:
        return self.d_empty - fill * (self.d_empty - self.d_full)

    def fill_for_distance(self, distance: float) -> float:
        return (self.d_empty - distance) / (self.d_empty - self.d_full)


@dataclass
class FlowModel:
    """Valve flow: mass rate scales linearly with servo opening angle."""

    full_open_g_per_s: float = 10.0  # grams/second at 180 degrees
    bowl_capacity_g: float = 200.0   # grams in the bowl at fill = 1.0

    def __post_init__(self):
        if self.full_open_g_per_s < 0 or self.bowl_capacity_g <= 0:
            raise ValueError("flow rate must be >= 0 and capacity positive")

    def rate_g_per_s(self, angle_deg: float) -> float:
        return self.full_open_g_per_s * (angle_deg / FULL_OPEN_DEG)


@dataclass
class WorldState:
    """Physical state observed by the sensors and mutated by the valves."""

    geometry: BowlGeometry = field(default_factory=BowlGeometry)
    flow: FlowModel = field(default_factory=FlowModel)
    bowl_fill: float = 0.0                      # fraction of capacity, [0, 1]
    hopper_mass: list[float] = field(default_factory=lambda: [500.0, 500.0])
    pet_present: bool = False
    pet_distance: float = 1.0                   # m from the IR sensor face

    def __post_init__(self):
        if not 0.0 <= self.bowl_fill <= 1.0:
            raise ValueError("bowl_fill must be in [0, 1]")
        if len(self.hopper_mass) != 2 or any(m < 0 for m in self.hopper_mass):
            raise ValueError("hopper_mass must be two non-negative values")

    @property
    def bowl_mass_g(self) -> float:
        return self.bowl_fill * self.flow.bowl_capacity_g

    @property
    def total_mass_g(self) -> float:
        return self.bowl_mass_g + sum(self.hopper_mass)

    def surface_distance(self) -> float:
        """Distance from the ultrasonic face to the bowl contents, meters."""
        return self.geometry.distance_for_fill(self.bowl_fill)


def advance(world: WorldState, clock: SimClock, servo_angles: tuple[float, float]) -> WorldState:
    """Integrate one tick of valve flow and step the clock.

    Each open valve moves mass from its hopper slot into the bowl at the
    flow-model rate. Arithmetic saturates: the bowl caps at fill 1.0 and a
    hopper never goes negative, so total mass is conserved exactly up to
    float rounding.
    """
    for angle in servo_angles:
        if not 0.0 <= angle <= 180.0:
            raise ValueError(f"servo angle {angle} outside [0, 180]")

    dt = clock.tick
    capacity = world.flow.bowl_capacity_g
    for slot, angle in enumerate(servo_angles):
        if angle <= 0.0:
            continue
        headroom_g = (1.0 - world.bowl_fill) * capacity
        moved_g = min(world.flow.rate_g_per_s(angle) * dt,
                      world.hopper_mass[slot], headroom_g)
        if moved_g <= 0.0:
            continue
        world.hopper_mass[slot] -= moved_g
        world.bowl_fill = min(1.0, world.bowl_fill + moved_g / capacity)
    clock.advance()
    return world


def script_pet(world: WorldState, present: bool, distance: float) -> WorldState:
    """Scenario hook: place or remove the pet at a given distance."""
    if distance < 0:
        raise ValueError("pet distance must be >= 0")
    world.pet_present = present
    world.pet_distance = distance
    return world
