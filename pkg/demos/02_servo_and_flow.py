"""From servo command to food in the bowl.

The feeder's two hoppers each sit behind a valve driven by a small hobby
servo (rated 0.1 s per 60 degrees, 0-180 range). Commanding a target
angle does not teleport the horn: it slews there, and mass flows through
the valve in proportion to how far open it is. This script steps the
physics directly, without the controller in the loop.
"""

from feedersim import Servo, SimClock, WorldState, advance, servo_step

# --- servo kinematics ----------------------------------------------------

servo = Servo(angle=0.0, target=180.0)
clock = SimClock(tick=0.01)
print("servo sweep 0 -> 180 degrees:")
while servo.angle != servo.target:
    servo_step(servo, clock.tick)
    clock.advance()
    if clock.ticks % 10 == 0:
        print(f"  t={clock.now:.2f} s  angle={servo.angle:6.1f}")
print(f"arrived in {clock.now:.2f} s (rated: 0.30 s)\n")

# --- valve flow into the bowl ---------------------------------------------

world = WorldState(hopper_mass=[500.0, 500.0])
clock = SimClock(tick=0.01)
total_before = world.total_mass_g
print(f"bowl empty, surface distance {world.surface_distance() * 100:.1f} cm")
print("valve 1 fully open, 10 g/s into a 200 g bowl:")

servo = Servo(angle=0.0, target=180.0)
while world.bowl_fill < 1.0 and clock.now < 60.0:
    servo_step(servo, clock.tick)
    advance(world, clock, (servo.angle, 0.0))
    if clock.ticks % 500 == 0:
        print(f"  t={clock.now:5.1f} s  fill={world.bowl_fill:5.1%}  "
              f"surface={world.surface_distance() * 100:5.2f} cm  "
              f"hopper1={world.hopper_mass[0]:6.1f} g")

print(f"\nfull at t={clock.now:.2f} s, surface distance "
      f"{world.surface_distance() * 100:.1f} cm")
print(f"mass books balance to {abs(world.total_mass_g - total_before):.2e} g")

# A starved hopper caps the fill: load only 20 g (a tenth of the bowl).
world = WorldState(hopper_mass=[20.0, 500.0])
clock = SimClock(tick=0.01)
while clock.now < 30.0:
    advance(world, clock, (180.0, 0.0))
print(f"\nwith a 20 g hopper the fill plateaus at {world.bowl_fill:.1%}")
