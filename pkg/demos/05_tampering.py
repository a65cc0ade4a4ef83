"""
What happens when someone cheats
================================

A tamper hook on the in-memory transport rewrites messages in flight.
P2 re-encrypts every mask opening and recomputes the terms, so any change
to M2 is caught before P2 signs.  C checks both signatures over the same
list, so changes after signing are caught there.
"""

import dataclasses
import random

from privdist import GeoPoint, ProtocolError, Session, generate_session_keys, load_standard_group
from privdist.protocol import M2, M3, make_config
from privdist.transport import InMemoryTransport

rng = random.Random(5)
g = load_standard_group("test-512")
keys = generate_session_keys(g, rng)
cfg = make_config(g, keys, n=8, session_id=b"tamper")
a, b = GeoPoint.from_degrees(48.85, 2.35), GeoPoint.from_degrees(51.5, -0.12)


def bump_mask(sender, dst, msg):
    if isinstance(msg, M2):
        (v, r), *rest = msg.masks_plain
        return dataclasses.replace(msg, masks_plain=((v + 1, r), *rest))
    return msg


def flip_for_c(sender, dst, msg):
    if isinstance(msg, M3):
        ea = list(msg.ea_prime)
        ea[0] = type(ea[0])(ea[0].c1, ea[0].c2 ^ 1)
        return dataclasses.replace(msg, ea_prime=tuple(ea))
    return msg


for label, hook in (("altered mask opening", bump_mask), ("bit flip on the way to C", flip_for_c)):
    t = InMemoryTransport(g, hook)
    try:
        Session(cfg, a, b, keys, rng).run(t)
        print(label, "-> accepted (should not happen)")
    except ProtocolError as exc:
        print(f"{label} -> {exc.role} aborts with {exc.reason}; "
              f"sent: {[entry[2] for entry in t.log]}")
