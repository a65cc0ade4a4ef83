"""
One session of the distance protocol
====================================

P2 sends its ciphertexts to P1 (M1).  P1 builds the three term ciphertexts,
hides them among N-3 mask ciphertexts, shuffles, and sends the list plus the
mask openings back to P2 (M2) and a signed copy to C (M3).  P2 audits the
list and countersigns it (M4).  C checks both signatures, decrypts, sums,
and broadcasts the masked total (M5).  Each user removes the mask sum S.
"""

import random

from privdist import GeoPoint, Session, generate_session_keys, haversine_direct, load_standard_group
from privdist.protocol import make_config
from privdist.transport import InMemoryTransport

rng = random.Random(2024)
g = load_standard_group("modp-2048")
keys = generate_session_keys(g, rng)
cfg = make_config(g, keys, n=20, session_id=b"demo")

barcelona = GeoPoint.from_degrees(41.3851, 2.1734)
tarragona = GeoPoint.from_degrees(41.1189, 1.2445)

transport = InMemoryTransport(g)
session = Session(cfg, barcelona, tarragona, keys, rng)
d1, d2 = session.run(transport)
print(f"P1 learns {d1:.6f} km, P2 learns {d2:.6f} km")
print(f"plaintext  {haversine_direct(barcelona, tarragona):.6f} km")

for sender, recipients, kind, size in transport.log:
    print(f"  {kind}: {sender} -> {', '.join(recipients)}  ({size} bytes)")
print("exponentiations:", {r: c.count for r, c in session.counters.items()})

# Identical positions give zero.
d1, _ = Session(cfg, barcelona, barcelona, keys, rng).run(InMemoryTransport(g))
print(f"\nsame spot: {d1 * 1000:.3f} m")
