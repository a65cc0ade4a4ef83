"""Fixed-point encoding of signed reals into ``Z*_p``.

A real ``v`` in ``[-1, 1]`` is scaled by ``F`` and stored as a centered
residue: ``round(v*F) mod p``.  Since ``(-u mod p)(-w mod p) = uw mod p``,
signs survive homomorphic multiplication without any side channel, as long
as the magnitude of the product stays below ``p/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .groups import GroupParams

DEFAULT_SCALE = 10**18
FACTOR_COUNT = 5


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class FixedPointCodec:
    """Codec bound to one group.

    Every protocol term is a product of ``factor_count`` encoded factors, so
    decrypted terms carry scale ``F**factor_count``.
    """

    params: GroupParams
    scale: int = DEFAULT_SCALE
    factor_count: int = FACTOR_COUNT

    def __post_init__(self):
        if not isinstance(self.scale, int) or self.scale <= 0 or self.scale % 2:
            raise EncodingError(f"scale must be a positive even integer, got {self.scale!r}")
        if 4 * self.term_scale >= self.params.p:
            raise EncodingError(
                f"scale {self.scale} too large for a {self.params.p.bit_length()}-bit group: "
                f"need 4*F^{self.factor_count} < p"
            )

    @property
    def term_scale(self) -> int:
        return self.scale**self.factor_count

    def to_residue(self, z: int) -> int:
        """Map a nonzero signed integer to its centered residue."""
        if z == 0:
            raise EncodingError("0 has no representative in Z*_p")
        if 2 * abs(z) >= self.params.p:
            raise EncodingError("magnitude too large for centered decoding")
        return z % self.params.p

    def scaled(self, v: float) -> int:
        """``round(v*F)`` with exact zeros perturbed to magnitude 1."""
        if not -1.0 <= v <= 1.0:
            raise EncodingError(f"value {v!r} outside [-1, 1]")
        z = round(Fraction(v) * self.scale)
        if z == 0:
            z = int(math.copysign(1, v))
        return z

    def encode_real(self, v: float) -> int:
        return self.to_residue(self.scaled(v))

    def decode_signed(self, m: int) -> int:
        p = self.params.p
        if not 1 <= m < p:
            raise EncodingError("residue outside [1, p-1]")
        return m if m <= (p - 1) // 2 else m - p

    def decode_term_sum(self, total: int) -> float:
        return total / self.term_scale
