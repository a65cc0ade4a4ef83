"""
Encoding reals as group elements
================================

Sines and cosines become integers by scaling with F and rounding; negative
values wrap to p - |v|.  A product of five encoded factors then carries the
scale F^5, and decoding with centred residues recovers the sign.
"""

import math

from privdist import FixedPointCodec, load_standard_group

g = load_standard_group("modp-2048")
codec = FixedPointCodec(g)  # F = 10**18 by default
small = FixedPointCodec(g, 10**12)

for v in (1.0, -0.5, math.sin(math.pi / 6), 0.0):
    e = small.encode_real(v)
    shown = e if e < 10**20 else f"p - {g.p - e}"
    print(f"encode({v:+.3f}) at F=1e12 -> {shown}")

# Five factors multiplied in the group, decoded back to a real.
vals = [0.3, -0.7, 0.9, 0.5, -0.25]
prod = 1
for v in vals:
    prod = prod * codec.encode_real(v) % g.p
print("\nproduct of five factors:", codec.decode_signed(prod) / codec.term_scale,
      "exact:", math.prod(vals))

# Near a = 0 the distance is 2R*sqrt(a), so rounding noise of size 1/F in a
# shows up as metres when F is only 1e12.
for F in (10**12, 10**18):
    print(f"F = {F:.0e}: noise 1/F in a ~ {2 * 6371e3 * math.sqrt(1 / F):.2f} m at d = 0")
