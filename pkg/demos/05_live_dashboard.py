"""Live mode: the broker on real HTTP, with this script playing the owner.

`feedersim serve` hosts the broker API and runs the device loop against
the wall clock (optionally compressed by a speed factor). The operator UI
in frontend/ talks to exactly the endpoints used below; this script drives
them by hand so the whole exchange is visible in one terminal.

To run the real dashboard instead:

    feedersim serve --bind 127.0.0.1:8000 --speed 10 --ui frontend/dist
    # then open http://127.0.0.1:8000/
"""

import json
import threading
import time
import urllib.request

from feedersim import Scenario, ScenarioEvent
from feedersim.live import serve_live


def get_json(url):
    with urllib.request.urlopen(url, timeout=5.0) as resp:
        return json.loads(resp.read())


# Boot the live server on an ephemeral port, 60x faster than real time so
# the 15 s cloud window passes in a quarter second.
ready = threading.Event()
stop = threading.Event()
box = {}
scenario = Scenario(duration=3600.0, seed=1,
                    events=[ScenarioEvent(t=2.0, kind="pet_arrives",
                                          data={"distance": 0.05})])
threading.Thread(
    target=serve_live,
    kwargs=dict(scenario=scenario, bind="127.0.0.1:0", speed=60.0,
                stop_event=stop, install_signal_handler=False,
                on_ready=lambda s: (box.update(port=s.port), ready.set())),
    daemon=True).start()
ready.wait(5.0)
base = f"http://127.0.0.1:{box['port']}"
print(f"live broker at {base}")

config = get_json(f"{base}/config.json")
ir, app = config["channels"]["ir"], config["channels"]["app"]
print(f"geometry from /config.json: empty at {config['geometry']['d_empty']} m, "
      f"full at {config['geometry']['d_full']} m")

def last_ir():
    return get_json(f"{base}/channels/{ir['id']}/feeds/last.json?api_key={ir['read_key']}")

# Wait for the pet to show up in the telemetry, like the app's poll loop.
print("\npolling for the pet...")
while not (entry := last_ir()) or entry["field1"] != "1":
    time.sleep(0.1)
print(f"pet detected: {entry}")

# Choose feed 2, exactly as the dashboard's button does.
body = urllib.request.urlopen(
    f"{base}/update?api_key={app['write_key']}&field1=2", timeout=5.0).read()
print(f"\nchose feed 2 -> AppChannel entry {body.decode()}")

# Watch the surface distance fall as the servo dispenses, then stop.
print("\nwatching the bowl fill:")
threshold = config["controller"]["full_threshold"]
seen = set()
while True:
    entry = last_ir()
    key = entry["entry_id"]
    if key not in seen:
        seen.add(key)
        print(f"  virtual t={entry['created_at']:7.1f}  surface={float(entry['field2']):.4f} m")
    if float(entry["field2"]) <= threshold:
        break
    time.sleep(0.05)
print("bowl full; servo stopped.")
stop.set()
