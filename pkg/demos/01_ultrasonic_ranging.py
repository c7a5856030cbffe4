"""Ultrasonic ranging, step by step.

The distance sensor over the bowl works like sonar: hold the trigger pin
high for at least 10 microseconds, a 40 kHz burst goes out, and the echo
pin then stays high for exactly the round-trip time of the sound. Distance
falls out of one line of arithmetic:

    distance = speed_of_sound * echo_high_time / 2

This script walks the model through the cases that matter on the bench.
"""

import random

from feedersim import UltrasonicConfig, pulse_to_distance, trigger_measure

cfg = UltrasonicConfig()
print(f"speed of sound {cfg.speed_of_sound} m/s, window "
      f"[{cfg.min_range * 100:.0f}, {cfg.max_range * 100:.0f}] cm, "
      f"accuracy {cfg.accuracy * 1000:.0f} mm")

# A target at 10 cm: the echo comes back after ~583 microseconds.
echo = trigger_measure(cfg, true_distance=0.10, trigger_hold=10e-6)
print(f"\n10 cm target  -> echo high for {echo.pulse_width * 1e6:.2f} us")
print(f"converted back -> {pulse_to_distance(cfg, echo.pulse_width) * 100:.4f} cm")

# Hold the trigger for only 5 us and nothing happens: the part never
# starts a measurement.
print(f"\n5 us trigger  -> {trigger_measure(cfg, 0.10, 5e-6).kind}")

# Outside the practical 2-80 cm window there is no usable echo either.
for d in (0.01, 1.20):
    print(f"{d * 100:>5.0f} cm target -> {trigger_measure(cfg, d, 10e-6).kind}")

# With noise enabled the reading wanders inside the rated +-3 mm band.
noisy = UltrasonicConfig(noise_enabled=True)
rng = random.Random(7)
print("\nnoisy readings of a 25 cm target:")
for _ in range(5):
    echo = trigger_measure(noisy, 0.25, 10e-6, rng=rng)
    measured = pulse_to_distance(noisy, echo.pulse_width)
    print(f"  {measured * 100:.3f} cm  (error {abs(measured - 0.25) * 1000:+.2f} mm)")

# Sweep a target through the whole window: the round trip is exact when
# noise is off.
worst = max(abs(pulse_to_distance(cfg, trigger_measure(cfg, d / 1000, 10e-6).pulse_width) - d / 1000)
            for d in range(20, 801))
print(f"\nworst round-trip error across 2-80 cm: {worst:.2e} m")
