"""Launch the live service and connect a raw telemetry client.

Starts the position-sharing server on an ephemeral port, reads the scene
snapshot and a few fixes exactly as the browser console would, drags the
human around by sending goal messages, and shuts down.  For the graphical
console, run instead:

    vlpsim serve --scenario demos/scenarios/default.json --bind 127.0.0.1:7555

and open http://127.0.0.1:7556/ (build frontend/ first; see README).
"""

import json
import socket
import time

from vlpsim import default_scenario
from vlpsim.protocol import ControlMessage, NavGoal, encode_message
from vlpsim.server import CoopServer

server = CoopServer(default_scenario(), port=0)
server.start()
host, port = server.address
print(f"server on {host}:{port}")

sock = socket.create_connection((host, port))
stream = sock.makefile("rwb")

snapshot = json.loads(stream.readline())
print(f"snapshot: {len(snapshot['lamps'])} lamps, "
      f"agents {[a[0] for a in snapshot['agents']]}")

print("\nfirst seconds of telemetry:")
t_end = time.time() + 3.0
while time.time() < t_end:
    msg = json.loads(stream.readline())
    if msg["type"] == "fix":
        print(f"  t={msg['t_ms']:5d} ms  {msg['agent_id']:<6} "
              f"({msg['x']:+.2f}, {msg['y']:+.2f})  {msg['scheme']}")

print("\nsteering the human to (1.0, 0.5) ...")
sock.sendall(encode_message(ControlMessage(command="scripted_off")).encode())
sock.sendall(encode_message(NavGoal(x=1.0, y=0.5, issued_t_ms=0)).encode())
t_end = time.time() + 4.0
last = None
while time.time() < t_end:
    msg = json.loads(stream.readline())
    if msg["type"] == "fix" and msg["agent_id"] == "phone":
        last = (msg["x"], msg["y"])
print(f"human fix now near {last}")

sock.close()
server.stop()
print("done")
