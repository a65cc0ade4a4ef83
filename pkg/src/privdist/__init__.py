"""Privacy-preserving Haversine distance between two users with ElGamal.

Two users and a key-holding control center compute the great-circle
distance between the users' GPS positions; ciphertexts are combined with
ElGamal's multiplicative homomorphism so nobody sees the other coordinates.
"""

from .encoding import FixedPointCodec
from .groups import (
    Ciphertext,
    EncKeyPair,
    ExpCounter,
    GroupParams,
    SigKeyPair,
    Signature,
    decrypt,
    encrypt,
    generate_group,
    hom_mul,
    keygen,
    load_standard_group,
    sig_keygen,
    sign,
    verify,
)
from .haversine import (
    EarthModel,
    GeoPoint,
    TermBreakdown,
    a_from_split,
    distance_from_a,
    haversine_direct,
    term_breakdown,
)
from .protocol import (
    ProtocolConfig,
    ProtocolError,
    Session,
    SessionKeys,
    generate_session_keys,
    make_config,
    run_session,
)
from .transport import InMemoryTransport

__version__ = "0.1.0"

__all__ = [
    "FixedPointCodec",
    "Ciphertext",
    "EncKeyPair",
    "ExpCounter",
    "GroupParams",
    "SigKeyPair",
    "Signature",
    "decrypt",
    "encrypt",
    "generate_group",
    "hom_mul",
    "keygen",
    "load_standard_group",
    "sig_keygen",
    "sign",
    "verify",
    "EarthModel",
    "GeoPoint",
    "TermBreakdown",
    "a_from_split",
    "distance_from_a",
    "haversine_direct",
    "term_breakdown",
    "ProtocolConfig",
    "ProtocolError",
    "Session",
    "SessionKeys",
    "generate_session_keys",
    "make_config",
    "run_session",
    "InMemoryTransport",
]
