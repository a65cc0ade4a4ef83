"""
Three roles over TCP
====================

The same session with each role behind its own socket.  P1 listens for P2;
both users then connect to C, which pairs their connections by session id.
Each role runs in a thread here; ``privdist party`` runs them as processes.
"""

import random
import threading

from privdist import GeoPoint, generate_session_keys, load_standard_group
from privdist import net
from privdist.protocol import make_config

g = load_standard_group("modp-2048")
keys = generate_session_keys(g, random.Random(3))
cfg = make_config(g, keys, n=20, session_id=b"tcp-demo")

c_listener = net.listen(("127.0.0.1", 0))
p1_listener = net.listen(("127.0.0.1", 0))
c_addr, p1_addr = c_listener.getsockname()[:2], p1_listener.getsockname()[:2]

server = net.ControlCenterServer(cfg, keys.c_keys, c_listener, on_audit=lambda a: print("C:", a.line()))
results = {}
threads = [
    threading.Thread(target=server.serve),
    threading.Thread(target=lambda: results.__setitem__("p1", net.run_p1(
        cfg, GeoPoint.from_degrees(40.4168, -3.7038), keys.p1_sig, p1_listener, c_addr))),
    threading.Thread(target=lambda: results.__setitem__("p2", net.run_p2(
        cfg, GeoPoint.from_degrees(39.4699, -0.3763), keys.p2_sig, p1_addr, c_addr))),
]
for t in threads:
    t.start()
for t in threads:
    t.join()

for role, out in sorted(results.items()):
    print(f"{role}: {out.distance:.3f} km, {out.exponentiations} exponentiations, "
          f"{out.frames_sent} frames sent")
print("M5 broadcasts:", server.broadcasts)
