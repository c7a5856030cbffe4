"""The telemetry broker: channels, keys, and the 15-second write window.

The cloud side of the feeder is a channel store in the style of the public
IoT dashboards: every channel has up to 8 data fields, 3 location fields
and a status note, separate write and read keys, and a hard minimum
interval between accepted writes. The device buffers and retries around
that window; nothing is ever queued server-side.
"""

import random
import tempfile

from feedersim import Broker, RateLimitPolicy, WriteAccepted

log_path = tempfile.mktemp(suffix=".jsonl")
broker = Broker(policy=RateLimitPolicy(min_interval=15.0),
                persist_path=log_path, rng=random.Random(2022))

# The feeder uses two channels: device -> cloud telemetry, and the owner's
# app -> cloud commands.
ir = broker.create_channel("IRCh", ["presence", "distance_m"], now=0.0)
app = broker.create_channel("AppChannel", ["selection"], now=0.0)
print(f"IRCh       id={ir.id} write_key={ir.write_key} read_key={ir.read_key}")
print(f"AppChannel id={app.id} write_key={app.write_key} read_key={app.read_key}")

# Writes inside the window bounce with a retry-after hint; the boundary
# write at exactly 15 s is accepted.
print("\nwrite schedule against the 15 s window:")
for t in (0.0, 10.0, 14.999, 15.0, 29.0, 30.0):
    result = broker.write_update(ir.write_key, {1: 1, 2: 0.12}, now=t)
    if isinstance(result, WriteAccepted):
        print(f"  t={t:7.3f}  accepted as entry {result.entry_id}")
    else:
        print(f"  t={t:7.3f}  rejected ({result.reason}, retry in {result.retry_after:.3f} s)")

# Reads need the read key; the write key is a different credential class.
print("\nlatest entry:", broker.read_last(ir.id, ir.read_key).to_record())
try:
    broker.read_last(ir.id, ir.write_key)
except Exception as err:
    print(f"reading with the write key fails: {type(err).__name__}")

# Every accepted write went straight to an append-only JSONL log, so a
# fresh broker process rebuilds the exact same state from it.
dump = broker.dump_state()
broker.close()
revived = Broker(persist_path=log_path)
print(f"\nreplay from {log_path}")
print("byte-identical after replay:", revived.dump_state() == dump)
revived.close()
