"""
Splitting the Haversine formula into products
=============================================

The value a inside the Haversine formula can be written as 1/2 plus three
terms, each a product of one value from each user.  Products are exactly
what the ElGamal homomorphism can evaluate.
"""

import numpy as np

from privdist import GeoPoint, a_from_split, haversine_direct, term_breakdown
from privdist.haversine import SPLITS, haversine_a

barcelona = GeoPoint.from_degrees(41.3851, 2.1734)
tarragona = GeoPoint.from_degrees(41.1189, 1.2445)
print(f"Barcelona - Tarragona: {haversine_direct(barcelona, tarragona):.3f} km")

tb = term_breakdown(barcelona, tarragona)
print("a1, a2, a3 =", tb.a1, tb.a2, tb.a3)
print("1/2 + a1 + a2 + a3 =", tb.a)
print("step form          =", haversine_a(barcelona.lat, barcelona.lon, tarragona.lat, tarragona.lon))

# All four ways of grouping the six terms give the same a.
rng = np.random.default_rng(0)
lat = np.arcsin(rng.uniform(-1, 1, (2, 10_000)))
lon = rng.uniform(-np.pi, np.pi, (2, 10_000))
tb = term_breakdown(GeoPoint(lat[0], lon[0]), GeoPoint(lat[1], lon[1]))
ref = a_from_split(tb, SPLITS[0])
for name in SPLITS:
    print(f"{name:>9}: max deviation {np.max(np.abs(a_from_split(tb, name) - ref)):.1e}")

# Coincident points: the three terms sum to exactly -1/2.
tb = term_breakdown(barcelona, barcelona)
print("\ncoincident: a1 + a2 + a3 =", tb.a1 + tb.a2 + tb.a3)
