"""Three-party private distance protocol.

Roles: two users ``P1`` and ``P2`` hold one coordinate each; a control
center ``C`` holds the ElGamal key every ciphertext is encrypted under.

Flow (five transmissions)::

    M1  P2 -> P1      P2's four trig ciphertexts
    M2  P1 -> P2      permuted list E_A', P1's four ciphertexts, masks in clear
    M3  P1 -> C       E_A' signed by P1
    M4  P2 -> C       digest of E_A' signed by P2 (only if P2's check passed)
    M5  C  -> P1, P2  sum of all decrypted entries

``E_A'`` hides the three encrypted haversine terms among ``N-3`` random
masks whose sum ``S`` both users know; ``C`` only sees the blinded total.
"""

from __future__ import annotations

import hashlib
import math
import secrets
import struct
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from . import groups
from .encoding import FixedPointCodec
from .groups import Ciphertext, EncKeyPair, ExpCounter, GroupParams, SigKeyPair, Signature
from .haversine import CorruptedRunError, EarthModel, GeoPoint, distance_from_a

P1, P2, C = "p1", "p2", "c"
ROLES = (P1, P2, C)
TERM_COUNT = 3

# abort reasons
REJECT_TAMPERED = "reject-tampered"
REJECT_SIZE = "reject-size"
BAD_SIGNATURE_P1 = "bad-signature-p1"
BAD_SIGNATURE_P2 = "bad-signature-p2"
DIGEST_MISMATCH = "digest-mismatch"
MALFORMED_CIPHERTEXT = "malformed-ciphertext"
SESSION_MISMATCH = "session-mismatch"
CORRUPTED_RUN = "corrupted-run"
UNEXPECTED_MESSAGE = "unexpected-message"


class ProtocolError(Exception):
    """A party aborted the session."""

    def __init__(self, reason: str, role: Optional[str] = None, detail: str = ""):
        self.reason = reason
        self.role = role
        self.detail = detail
        msg = f"[{role}] {reason}" if role else reason
        super().__init__(f"{msg}: {detail}" if detail else msg)


@dataclass(frozen=True)
class ProtocolConfig:
    group: GroupParams
    c_pubkey: int
    codec: FixedPointCodec
    n: int
    p1_sig_pub: int
    p2_sig_pub: int
    session_id: bytes = b""
    earth: EarthModel = field(default_factory=EarthModel)
    allow_no_masks: bool = False

    def __post_init__(self):
        min_n = TERM_COUNT if self.allow_no_masks else TERM_COUNT + 1
        if self.n < min_n:
            raise ValueError(f"N must be at least {min_n}, got {self.n}")
        if self.codec.params != self.group:
            raise ValueError("codec is bound to a different group")
        if not self.group.is_element(self.c_pubkey):
            raise ValueError("control center public key is not a group element")

    @property
    def mask_count(self) -> int:
        return self.n - TERM_COUNT

    @property
    def mask_bound(self) -> int:
        return self.codec.term_scale // 2


@dataclass(frozen=True)
class PartyCiphertexts:
    e_cos_lat: Ciphertext
    e_sin_lat: Ciphertext
    e_cos_lon: Ciphertext
    e_sin_lon: Ciphertext

    def as_list(self) -> List[Ciphertext]:
        return [self.e_cos_lat, self.e_sin_lat, self.e_cos_lon, self.e_sin_lon]

    @classmethod
    def from_list(cls, cts) -> "PartyCiphertexts":
        cts = list(cts)
        if len(cts) != 4:
            raise ValueError(f"expected 4 ciphertexts, got {len(cts)}")
        return cls(*cts)


@dataclass(frozen=True)
class MaskSet:
    values: Tuple[int, ...]
    randomness: Tuple[int, ...]

    @property
    def S(self) -> int:
        return sum(self.values)

    def pairs(self) -> List[Tuple[int, int]]:
        return list(zip(self.values, self.randomness))


@dataclass(frozen=True)
class TermCiphertexts:
    e_a1: Ciphertext
    e_a2: Ciphertext
    e_a3: Ciphertext

    def as_list(self) -> List[Ciphertext]:
        return [self.e_a1, self.e_a2, self.e_a3]


# -- wire messages ----------------------------------------------------------

@dataclass(frozen=True)
class M1:
    session: bytes
    p2_ciphertexts: PartyCiphertexts


@dataclass(frozen=True)
class M2:
    session: bytes
    ea_prime: Tuple[Ciphertext, ...]
    p1_ciphertexts: PartyCiphertexts
    masks_plain: Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class M3:
    session: bytes
    ea_prime: Tuple[Ciphertext, ...]
    sig_p1: Signature


@dataclass(frozen=True)
class M4:
    session: bytes
    digest: bytes
    sig_p2: Signature


@dataclass(frozen=True)
class M5:
    session: bytes
    total: int


ProtocolMessage = Union[M1, M2, M3, M4, M5]
MESSAGE_TYPES = {"M1": M1, "M2": M2, "M3": M3, "M4": M4, "M5": M5}


def message_type(msg: ProtocolMessage) -> str:
    return type(msg).__name__


# -- building blocks --------------------------------------------------------

def _encrypt_real(cfg: ProtocolConfig, v: float, rng, counter) -> Ciphertext:
    return groups.encrypt(cfg.group, cfg.c_pubkey, cfg.codec.encode_real(v),
                          rng=rng, counter=counter)


def p_make_ciphertexts(cfg: ProtocolConfig, point: GeoPoint, rng=None,
                       counter: Optional[ExpCounter] = None) -> PartyCiphertexts:
    """Encrypt cos/sin of latitude and longitude under C's key (8 exponentiations)."""
    vals = (math.cos(point.lat), math.sin(point.lat), math.cos(point.lon), math.sin(point.lon))
    return PartyCiphertexts(*(_encrypt_real(cfg, v, rng, counter) for v in vals))


def constant_ciphertexts(cfg: ProtocolConfig) -> Tuple[Ciphertext, Ciphertext]:
    """Encryptions of -1/2 and 1 with zero randomness, identical for every party."""
    enc = cfg.codec.encode_real
    e_half_neg = groups.encrypt(cfg.group, cfg.c_pubkey, enc(-0.5), r=0)
    e_one = groups.encrypt(cfg.group, cfg.c_pubkey, enc(1.0), r=0)
    return e_half_neg, e_one


def compute_terms(cfg: ProtocolConfig, own: PartyCiphertexts, other: PartyCiphertexts,
                  constants: Tuple[Ciphertext, Ciphertext]) -> TermCiphertexts:
    """Encrypted ``a1, a2, a3``, each a product of exactly five encoded factors."""
    grp = cfg.group
    e_half_neg, e_one = constants
    e11 = groups.hom_mul(grp, own.e_cos_lat, other.e_cos_lat)
    e22 = groups.hom_mul(grp, own.e_sin_lat, other.e_sin_lat)
    e33 = groups.hom_mul(grp, own.e_cos_lon, other.e_cos_lon)
    e44 = groups.hom_mul(grp, own.e_sin_lon, other.e_sin_lon)
    return TermCiphertexts(
        e_a1=groups.hom_mul(grp, e_half_neg, e22, e_one, e_one),
        e_a2=groups.hom_mul(grp, e_half_neg, e11, e44),
        e_a3=groups.hom_mul(grp, e_half_neg, e11, e33),
    )


def gen_masks(cfg: ProtocolConfig, rng=None) -> MaskSet:
    rng = rng or secrets.SystemRandom()
    bound = cfg.mask_bound
    values, nonces = [], []
    for _ in range(cfg.mask_count):
        v = 0
        while v == 0:
            v = rng.randrange(-bound, bound + 1)
        values.append(v)
        nonces.append(rng.randrange(1, cfg.group.q))
    return MaskSet(tuple(values), tuple(nonces))


def encrypt_mask(cfg: ProtocolConfig, value: int, nonce: int,
                 counter: Optional[ExpCounter] = None) -> Ciphertext:
    return groups.encrypt(cfg.group, cfg.c_pubkey, cfg.codec.to_residue(value), r=nonce,
                          counter=counter)


def build_ea_prime(cfg: ProtocolConfig, terms: TermCiphertexts, masks: MaskSet, rng=None,
                   counter: Optional[ExpCounter] = None) -> Tuple[List[Ciphertext], List[int]]:
    """Hide the term ciphertexts among encrypted masks and shuffle.

    Returns the permuted list and ``sigma`` with ``ea_prime[i] = unpermuted[sigma[i]]``.
    """
    if len(masks.values) != cfg.mask_count:
        raise ValueError(f"expected {cfg.mask_count} masks, got {len(masks.values)}")
    rng = rng or secrets.SystemRandom()
    unpermuted = terms.as_list() + [encrypt_mask(cfg, v, r, counter) for v, r in masks.pairs()]
    sigma = list(range(cfg.n))
    rng.shuffle(sigma)
    return [unpermuted[i] for i in sigma], sigma


def signing_payload(cfg: ProtocolConfig, ea_prime) -> bytes:
    """Canonical bytes both users sign: session id, N and the fixed-width ciphertexts."""
    sid = cfg.session_id
    parts = [struct.pack(">I", len(sid)), sid, struct.pack(">I", len(ea_prime))]
    parts.extend(ct.to_bytes(cfg.group) for ct in ea_prime)
    return b"".join(parts)


def payload_digest(cfg: ProtocolConfig, ea_prime) -> bytes:
    return hashlib.sha256(signing_payload(cfg, ea_prime)).digest()


def _check_ciphertexts(cfg: ProtocolConfig, cts, role: str) -> None:
    for ct in cts:
        if not (isinstance(ct, Ciphertext) and ct.is_valid(cfg.group)):
            raise ProtocolError(MALFORMED_CIPHERTEXT, role)


def _check_session(cfg: ProtocolConfig, msg, role: str) -> None:
    if msg.session != cfg.session_id:
        raise ProtocolError(SESSION_MISMATCH, role)


def p2_verify(cfg: ProtocolConfig, m2: M2, own_cts: PartyCiphertexts,
              constants: Tuple[Ciphertext, Ciphertext],
              counter: Optional[ExpCounter] = None) -> int:
    """P2's audit of M2: re-derive every entry of ``E_A'`` and compare multisets.

    Returns the mask sum ``S`` on success, raises ProtocolError otherwise.
    """
    if len(m2.ea_prime) != cfg.n or len(m2.masks_plain) != cfg.mask_count:
        raise ProtocolError(REJECT_SIZE, P2,
                            f"got {len(m2.ea_prime)} ciphertexts / {len(m2.masks_plain)} masks")
    _check_ciphertexts(cfg, m2.ea_prime, P2)
    _check_ciphertexts(cfg, m2.p1_ciphertexts.as_list(), P2)
    bound = cfg.mask_bound
    expected = compute_terms(cfg, m2.p1_ciphertexts, own_cts, constants).as_list()
    for value, nonce in m2.masks_plain:
        if not (value != 0 and abs(value) <= bound and 1 <= nonce < cfg.group.q):
            raise ProtocolError(REJECT_TAMPERED, P2, "mask outside the sampling interval")
        expected.append(encrypt_mask(cfg, value, nonce, counter))
    if Counter(expected) != Counter(m2.ea_prime):
        raise ProtocolError(REJECT_TAMPERED, P2, "E_A' does not match masks and terms")
    return sum(v for v, _ in m2.masks_plain)


def c_process(cfg: ProtocolConfig, m3: M3, m4: M4, c_keys: EncKeyPair,
              counter: Optional[ExpCounter] = None) -> M5:
    _check_session(cfg, m3, C)
    _check_session(cfg, m4, C)
    grp = cfg.group
    payload = signing_payload(cfg, m3.ea_prime)
    if not groups.verify(grp, cfg.p1_sig_pub, payload, m3.sig_p1, counter=counter):
        raise ProtocolError(BAD_SIGNATURE_P1, C)
    if m4.digest != hashlib.sha256(payload).digest():
        raise ProtocolError(DIGEST_MISMATCH, C)
    if not groups.verify(grp, cfg.p2_sig_pub, payload, m4.sig_p2, counter=counter):
        raise ProtocolError(BAD_SIGNATURE_P2, C)
    if len(m3.ea_prime) != cfg.n:
        raise ProtocolError(REJECT_SIZE, C)
    _check_ciphertexts(cfg, m3.ea_prime, C)
    total = 0
    for ct in m3.ea_prime:
        total += cfg.codec.decode_signed(groups.decrypt(grp, c_keys.s, ct, counter=counter))
    return M5(session=cfg.session_id, total=total)


def finalize(cfg: ProtocolConfig, m5: M5, S: int) -> float:
    a = cfg.codec.decode_term_sum(m5.total - S) + 0.5
    try:
        return distance_from_a(a, cfg.earth)
    except CorruptedRunError as exc:
        raise ProtocolError(CORRUPTED_RUN, detail=str(exc)) from exc


# -- party state machines ---------------------------------------------------

class _Party:
    role = ""

    def __init__(self, cfg: ProtocolConfig, rng=None):
        self.cfg = cfg
        self.rng = rng if rng is not None else secrets.SystemRandom()
        self.counter = ExpCounter()
        self.constants = constant_ciphertexts(cfg)
        self.distance: Optional[float] = None

    def _expect(self, msg, cls):
        if not isinstance(msg, cls):
            raise ProtocolError(UNEXPECTED_MESSAGE, self.role,
                                f"expected {cls.__name__}, got {type(msg).__name__}")
        _check_session(self.cfg, msg, self.role)


class Party1(_Party):
    """Combines ciphertexts, draws masks and submits ``E_A'`` to C."""

    role = P1

    def __init__(self, cfg: ProtocolConfig, point: GeoPoint, sig_key: SigKeyPair, rng=None):
        super().__init__(cfg, rng)
        self.point = point
        self.sig_key = sig_key
        self.S: Optional[int] = None
        self.sigma: Optional[List[int]] = None

    def on_m1(self, m1: M1) -> Tuple[M2, M3]:
        self._expect(m1, M1)
        cfg = self.cfg
        _check_ciphertexts(cfg, m1.p2_ciphertexts.as_list(), P1)
        own = p_make_ciphertexts(cfg, self.point, self.rng, self.counter)
        terms = compute_terms(cfg, own, m1.p2_ciphertexts, self.constants)
        masks = gen_masks(cfg, self.rng)
        ea_prime, self.sigma = build_ea_prime(cfg, terms, masks, self.rng, self.counter)
        self.S = masks.S
        sig = groups.sign(cfg.group, self.sig_key, signing_payload(cfg, ea_prime), self.rng,
                          counter=self.counter)
        ea = tuple(ea_prime)
        m2 = M2(cfg.session_id, ea, own, tuple(masks.pairs()))
        return m2, M3(cfg.session_id, ea, sig)

    def on_m5(self, m5: M5) -> float:
        self._expect(m5, M5)
        if self.S is None:
            raise ProtocolError(UNEXPECTED_MESSAGE, P1, "M5 before E_A' was sent")
        try:
            self.distance = finalize(self.cfg, m5, self.S)
        except ProtocolError as exc:
            exc.role = P1
            raise
        return self.distance


class Party2(_Party):
    """Sends its ciphertexts first, then audits P1's list before co-signing it."""

    role = P2

    def __init__(self, cfg: ProtocolConfig, point: GeoPoint, sig_key: SigKeyPair, rng=None):
        super().__init__(cfg, rng)
        self.point = point
        self.sig_key = sig_key
        self.own: Optional[PartyCiphertexts] = None
        self.S: Optional[int] = None

    def start(self) -> M1:
        self.own = p_make_ciphertexts(self.cfg, self.point, self.rng, self.counter)
        return M1(self.cfg.session_id, self.own)

    def on_m2(self, m2: M2) -> M4:
        self._expect(m2, M2)
        if self.own is None:
            raise ProtocolError(UNEXPECTED_MESSAGE, P2, "M2 before M1 was sent")
        self.S = p2_verify(self.cfg, m2, self.own, self.constants, self.counter)
        payload = signing_payload(self.cfg, m2.ea_prime)
        sig = groups.sign(self.cfg.group, self.sig_key, payload, self.rng, counter=self.counter)
        return M4(self.cfg.session_id, hashlib.sha256(payload).digest(), sig)

    def on_m5(self, m5: M5) -> float:
        self._expect(m5, M5)
        if self.S is None:
            raise ProtocolError(UNEXPECTED_MESSAGE, P2, "M5 before E_A' was accepted")
        try:
            self.distance = finalize(self.cfg, m5, self.S)
        except ProtocolError as exc:
            exc.role = P2
            raise
        return self.distance


class ControlCenter(_Party):
    """Verifies both signatures, decrypts ``E_A'`` and returns the blinded sum."""

    role = C

    def __init__(self, cfg: ProtocolConfig, keys: EncKeyPair, rng=None):
        super().__init__(cfg, rng)
        if groups.powmod(cfg.group.g, keys.s, cfg.group.p) != cfg.c_pubkey:
            raise ValueError("control center key does not match the configured public key")
        self.keys = keys
        self.m3: Optional[M3] = None
        self.m4: Optional[M4] = None
        self.result: Optional[M5] = None

    def receive(self, msg: Union[M3, M4]) -> Optional[M5]:
        """Store M3 or M4 (either order); returns M5 once both have arrived."""
        if isinstance(msg, M3):
            self._expect(msg, M3)
            self.m3 = msg
        elif isinstance(msg, M4):
            self._expect(msg, M4)
            self.m4 = msg
        else:
            raise ProtocolError(UNEXPECTED_MESSAGE, C, f"got {type(msg).__name__}")
        if self.m3 is not None and self.m4 is not None:
            self.result = c_process(self.cfg, self.m3, self.m4, self.keys, self.counter)
            return self.result
        return None


# -- sessions ---------------------------------------------------------------

@dataclass(frozen=True)
class SessionKeys:
    c_keys: EncKeyPair
    p1_sig: SigKeyPair
    p2_sig: SigKeyPair


def make_config(group: GroupParams, keys: SessionKeys, *, n: int = 20,
                scale: Optional[int] = None, earth: Optional[EarthModel] = None,
                session_id: bytes = b"", allow_no_masks: bool = False) -> ProtocolConfig:
    codec = FixedPointCodec(group) if scale is None else FixedPointCodec(group, scale)
    return ProtocolConfig(
        group=group, c_pubkey=keys.c_keys.y, codec=codec, n=n,
        p1_sig_pub=keys.p1_sig.v, p2_sig_pub=keys.p2_sig.v, session_id=session_id,
        earth=earth or EarthModel(), allow_no_masks=allow_no_masks,
    )


def generate_session_keys(group: GroupParams, rng=None) -> SessionKeys:
    return SessionKeys(
        c_keys=groups.keygen(group, rng),
        p1_sig=groups.sig_keygen(group, rng),
        p2_sig=groups.sig_keygen(group, rng),
    )


class Session:
    """All three parties of one session, driven over a shared transport.

    The transport needs ``send(sender, recipients, message)`` and
    ``recv(role) -> message``; one ``send`` is one transmission even when it
    has several recipients.
    """

    def __init__(self, cfg: ProtocolConfig, p1_point: GeoPoint, p2_point: GeoPoint,
                 keys: SessionKeys, rng=None):
        if rng is None:
            rngs: Dict[str, object] = {r: None for r in ROLES}
        else:
            # independent, reproducible streams per party
            rngs = {r: type(rng)(rng.getrandbits(128)) for r in ROLES}
        self.cfg = cfg
        self.p1 = Party1(cfg, p1_point, keys.p1_sig, rngs[P1])
        self.p2 = Party2(cfg, p2_point, keys.p2_sig, rngs[P2])
        self.c = ControlCenter(cfg, keys.c_keys, rngs[C])
        self.elapsed = {r: 0.0 for r in ROLES}

    @property
    def counters(self) -> Dict[str, ExpCounter]:
        return {P1: self.p1.counter, P2: self.p2.counter, C: self.c.counter}

    def _timed(self, role, fn, *args):
        t0 = time.perf_counter()
        try:
            return fn(*args)
        finally:
            self.elapsed[role] += time.perf_counter() - t0

    def run(self, transport) -> Tuple[float, float]:
        transport.send(P2, [P1], self._timed(P2, self.p2.start))
        m2, m3 = self._timed(P1, self.p1.on_m1, transport.recv(P1))
        transport.send(P1, [P2], m2)
        transport.send(P1, [C], m3)
        m4 = self._timed(P2, self.p2.on_m2, transport.recv(P2))
        transport.send(P2, [C], m4)
        m5 = None
        while m5 is None:
            m5 = self._timed(C, self.c.receive, transport.recv(C))
        transport.send(C, [P1, P2], m5)
        d1 = self._timed(P1, self.p1.on_m5, transport.recv(P1))
        d2 = self._timed(P2, self.p2.on_m5, transport.recv(P2))
        return d1, d2


def run_session(cfg: ProtocolConfig, p1_point: GeoPoint, p2_point: GeoPoint, transport,
                keys: SessionKeys, rng=None) -> Tuple[float, float]:
    return Session(cfg, p1_point, p2_point, keys, rng).run(transport)
