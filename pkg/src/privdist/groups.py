"""Safe-prime groups, ElGamal encryption and textbook ElGamal signatures.

Every ciphertext in the distance protocol lives in the order-``q`` subgroup
of ``Z*_p`` with ``p = 2q + 1``.  Plaintexts are arbitrary elements of
``Z*_p`` (not only quadratic residues), so the Legendre symbol of a message
is visible; this is a known trade-off of the construction.

Arithmetic is not constant time.
"""

from __future__ import annotations

import hashlib
import math
import secrets
from dataclasses import dataclass
from typing import Optional

try:
    from gmpy2 import powmod as _gmp_powmod

    def powmod(base: int, exp: int, mod: int) -> int:
        return int(_gmp_powmod(base, exp, mod))

except ImportError:  # pragma: no cover
    def powmod(base: int, exp: int, mod: int) -> int:
        return pow(base, exp, mod)


MIN_GROUP_BITS = 16
MR_ROUNDS = 64


class UnknownGroupError(KeyError):
    pass


class ExpCounter:
    """Tally of modular exponentiations performed by one party."""

    def __init__(self) -> None:
        self._count = 0

    @property
    def count(self) -> int:
        return self._count

    def add(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("exponentiation counter cannot decrease")
        self._count += n

    def __repr__(self) -> str:
        return f"ExpCounter({self._count})"


def _tick(counter: Optional[ExpCounter], n: int = 1) -> None:
    if counter is not None:
        counter.add(n)


@dataclass(frozen=True)
class GroupParams:
    p: int
    q: int
    g: int

    @property
    def byte_len(self) -> int:
        """Width of a serialized group element."""
        return (self.p.bit_length() + 7) // 8

    def element_bytes(self, x: int) -> bytes:
        return x.to_bytes(self.byte_len, "big")

    def is_element(self, x: int) -> bool:
        return isinstance(x, int) and 1 <= x < self.p

    def fingerprint(self) -> str:
        """Short hex tag identifying (p, g); used to catch group mismatches."""
        h = hashlib.sha256(self.element_bytes(self.p) + self.element_bytes(self.g))
        return h.hexdigest()[:16]

    def validate(self, rounds: int = MR_ROUNDS) -> None:
        """Raise ValueError unless every group invariant holds."""
        if self.p != 2 * self.q + 1:
            raise ValueError("p != 2q + 1")
        if not (is_probable_prime(self.q, rounds) and is_probable_prime(self.p, rounds)):
            raise ValueError("p or q is not prime")
        if self.g in (0, 1) or not 1 < self.g < self.p:
            raise ValueError("generator out of range")
        if powmod(self.g, self.q, self.p) != 1:
            raise ValueError("g does not have order q")


@dataclass(frozen=True)
class EncKeyPair:
    s: int
    y: int


@dataclass(frozen=True)
class Ciphertext:
    c1: int
    c2: int

    def to_bytes(self, params: GroupParams) -> bytes:
        return params.element_bytes(self.c1) + params.element_bytes(self.c2)

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> "Ciphertext":
        w = params.byte_len
        if len(data) != 2 * w:
            raise ValueError(f"ciphertext must be {2 * w} bytes, got {len(data)}")
        return cls(int.from_bytes(data[:w], "big"), int.from_bytes(data[w:], "big"))

    def is_valid(self, params: GroupParams) -> bool:
        return params.is_element(self.c1) and params.is_element(self.c2)


@dataclass(frozen=True)
class SigKeyPair:
    x: int
    v: int


@dataclass(frozen=True)
class Signature:
    r_sig: int
    s_sig: int


# ---------------------------------------------------------------------------
# primality and groups

_SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71]


def is_probable_prime(n: int, rounds: int = MR_ROUNDS, rng=None) -> bool:
    """Miller-Rabin; a composite survives ``rounds`` rounds with prob. <= 4**-rounds."""
    if n < 2:
        return False
    for sp in _SMALL_PRIMES:
        if n == sp:
            return True
        if n % sp == 0:
            return False
    rng = rng or secrets.SystemRandom()
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = powmod(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _hexint(s: str) -> int:
    return int("".join(s.split()), 16)


# RFC 3526, 2048-bit MODP group (group 14). 2 is a quadratic residue since p = 7 mod 8.
_MODP_2048 = _hexint("""
    FFFFFFFF FFFFFFFF C90FDAA2 2168C234 C4C6628B 80DC1CD1
    29024E08 8A67CC74 020BBEA6 3B139B22 514A0879 8E3404DD
    EF9519B3 CD3A431B 302B0A6D F25F1437 4FE1356D 6D51C245
    E485B576 625E7EC6 F44C42E9 A637ED6B 0BFF5CB6 F406B7ED
    EE386BFB 5A899FA5 AE9F2411 7C4B1FE6 49286651 ECE45B3D
    C2007CB8 A163BF05 98DA4836 1C55D39A 69163FA8 FD24CF5F
    83655D23 DCA3AD96 1C62F356 208552BB 9ED52907 7096966D
    670C354E 4ABC9804 F1746C08 CA18217C 32905E46 2E36CE3B
    E39E772C 180E8603 9B2783A2 EC07A28F B5C55DF0 6F4C52C9
    DE2BCBF6 95581718 3995497C EA956AE5 15D22618 98FA0510
    15728E5A 8AACAA68 FFFFFFFF FFFFFFFF
""")

# Small safe primes generated offline for fast tests; 4 = 2^2 always lies in the order-q subgroup.
_TEST_256 = _hexint("a75f6847ccc99b3e088835d621ef991a9008858eb29255407faccc04839fdbfb")
_TEST_512 = _hexint(
    "cea3720c7021fab221ff7ead3ac93eca5bbd8ba6ca1adb0af4790e979d99872d"
    "f09b08ab02639e16a9db12d9c911f0eca643736c9ade896e5b0fbcc711475d27"
)

STANDARD_GROUPS = {
    "test-23": (23, 2),
    "test-256": (_TEST_256, 4),
    "test-512": (_TEST_512, 4),
    "modp-2048": (_MODP_2048, 2),
}


def load_standard_group(name: str) -> GroupParams:
    try:
        p, g = STANDARD_GROUPS[name]
    except KeyError:
        raise UnknownGroupError(
            f"unknown group {name!r}; known: {', '.join(sorted(STANDARD_GROUPS))}"
        ) from None
    return GroupParams(p=p, q=(p - 1) // 2, g=g)


def generate_group(bits: int, rng=None) -> GroupParams:
    """Draw a fresh ``bits``-bit safe prime and a generator of its order-q subgroup.

    Fine for test-sized groups; at 2048 bits this takes minutes.
    """
    if bits < MIN_GROUP_BITS:
        raise ValueError(f"group size must be at least {MIN_GROUP_BITS} bits, got {bits}")
    rng = rng or secrets.SystemRandom()
    while True:
        q = rng.getrandbits(bits - 1) | (1 << (bits - 2)) | 1
        # p = 2q+1 is divisible by 3 when q = 1 mod 3
        if q % 3 == 1:
            continue
        if not is_probable_prime(q, 1, rng):
            continue
        p = 2 * q + 1
        if is_probable_prime(p, MR_ROUNDS, rng) and is_probable_prime(q, MR_ROUNDS, rng):
            break
    while True:
        h = rng.randrange(2, p - 1)
        g = h * h % p
        if g != 1:
            return GroupParams(p=p, q=q, g=g)


# ---------------------------------------------------------------------------
# ElGamal encryption

def _rng(rng):
    return rng if rng is not None else secrets.SystemRandom()


def keygen(params: GroupParams, rng=None, *, s: Optional[int] = None,
           counter: Optional[ExpCounter] = None) -> EncKeyPair:
    if s is None:
        s = _rng(rng).randrange(1, params.q)
    elif not 1 <= s < params.q:
        raise ValueError("secret key must lie in [1, q-1]")
    _tick(counter)
    return EncKeyPair(s=s, y=powmod(params.g, s, params.p))


def encrypt(params: GroupParams, y: int, m: int, r: Optional[int] = None, *,
            rng=None, counter: Optional[ExpCounter] = None) -> Ciphertext:
    """ElGamal encryption ``(g^r, m * y^r)``.

    ``r = 0`` is accepted for public constants and yields ``(1, m)`` with no
    exponentiation; any other explicit ``r`` must lie in ``[1, q-1]``.
    """
    if not params.is_element(m):
        raise ValueError("plaintext must lie in [1, p-1]")
    if r is None:
        r = _rng(rng).randrange(1, params.q)
    elif not (isinstance(r, int) and 0 <= r < params.q):
        raise ValueError("randomness must lie in [0, q-1]")
    if r == 0:
        return Ciphertext(1, m)
    _tick(counter, 2)
    return Ciphertext(powmod(params.g, r, params.p), m * powmod(y, r, params.p) % params.p)


def decrypt(params: GroupParams, s: int, ct: Ciphertext, *,
            counter: Optional[ExpCounter] = None) -> int:
    if not ct.is_valid(params):
        raise ValueError("malformed ciphertext")
    _tick(counter)
    shared = powmod(ct.c1, s, params.p)
    return ct.c2 * pow(shared, -1, params.p) % params.p


def hom_mul(params: GroupParams, *cts: Ciphertext) -> Ciphertext:
    """Componentwise product; decrypts to the product of the plaintexts."""
    c1, c2 = 1, 1
    for ct in cts:
        c1 = c1 * ct.c1 % params.p
        c2 = c2 * ct.c2 % params.p
    return Ciphertext(c1, c2)


# ---------------------------------------------------------------------------
# ElGamal signatures

def hash_to_int(params: GroupParams, msg: bytes) -> int:
    return int.from_bytes(hashlib.sha256(msg).digest(), "big") % (params.p - 1)


def sig_keygen(params: GroupParams, rng=None, *,
               counter: Optional[ExpCounter] = None) -> SigKeyPair:
    x = _rng(rng).randrange(1, params.p - 1)
    _tick(counter)
    return SigKeyPair(x=x, v=powmod(params.g, x, params.p))


def sign(params: GroupParams, key: SigKeyPair, msg: bytes, rng=None, *,
         counter: Optional[ExpCounter] = None) -> Signature:
    if not msg:
        raise ValueError("refusing to sign an empty message")
    rng = _rng(rng)
    n = params.p - 1
    h = hash_to_int(params, msg)
    while True:
        k = rng.randrange(1, n)
        if math.gcd(k, n) != 1:
            continue
        r_sig = powmod(params.g, k, params.p)
        s_sig = (h - key.x * r_sig) * pow(k, -1, n) % n
        # s = 0 would make the signature independent of k's secrecy
        if s_sig != 0:
            break
    _tick(counter)
    return Signature(r_sig=r_sig, s_sig=s_sig)


def verify(params: GroupParams, v: int, msg: bytes, sig: Signature, *,
           counter: Optional[ExpCounter] = None) -> bool:
    """Check ``g^H(m) == v^r * r^s (mod p)``; costs three exponentiations."""
    try:
        r_sig, s_sig = int(sig.r_sig), int(sig.s_sig)
    except (AttributeError, TypeError, ValueError):
        return False
    if not (1 <= r_sig < params.p and 0 <= s_sig < params.p - 1):
        return False
    if not params.is_element(v):
        return False
    h = hash_to_int(params, msg)
    _tick(counter, 3)
    lhs = powmod(params.g, h, params.p)
    rhs = powmod(v, r_sig, params.p) * powmod(r_sig, s_sig, params.p) % params.p
    return lhs == rhs

