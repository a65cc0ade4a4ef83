"""JSON-over-length-prefix encoding of protocol messages.

A frame is a 4-byte big-endian payload length followed by a UTF-8 JSON
object with ``type`` (M1..M5), ``session`` and the message fields.  Big
integers travel as lowercase hex strings; signed integers as a hex
magnitude plus an explicit ``"+"``/``"-"`` sign field.
"""

from __future__ import annotations

import json
import re
import struct
from typing import Optional

from .groups import Ciphertext, GroupParams, Signature
from .protocol import M1, M2, M3, M4, M5, MESSAGE_TYPES, PartyCiphertexts, ProtocolMessage

MAX_PAYLOAD = 16 * 1024 * 1024
HEADER = struct.Struct(">I")

_HEX = re.compile(r"[0-9a-f]+\Z")


class WireError(ValueError):
    """``reason`` is one of malformed (framing), malformed-json, unknown-type,
    oversize or group-mismatch."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


# -- field codecs -----------------------------------------------------------

def _hex(x: int) -> str:
    if x < 0:
        raise ValueError("negative value in an unsigned field")
    return format(x, "x")


def _unhex(s) -> int:
    if not isinstance(s, str) or not _HEX.match(s):
        raise WireError("malformed-json", f"bad hex field {s!r}")
    return int(s, 16)


def _signed(x: int) -> dict:
    return {"sign": "-" if x < 0 else "+", "mag": _hex(abs(x))}


def _unsigned(d) -> int:
    if not isinstance(d, dict) or d.get("sign") not in ("+", "-"):
        raise WireError("malformed-json", f"bad signed field {d!r}")
    mag = _unhex(d.get("mag"))
    return -mag if d["sign"] == "-" else mag


def _ct(ct: Ciphertext) -> list:
    return [_hex(ct.c1), _hex(ct.c2)]


def _unct(v) -> Ciphertext:
    if not (isinstance(v, list) and len(v) == 2):
        raise WireError("malformed-json", "ciphertext must be a pair")
    return Ciphertext(_unhex(v[0]), _unhex(v[1]))


def _ct_list(v) -> tuple:
    if not isinstance(v, list):
        raise WireError("malformed-json", "expected a ciphertext list")
    return tuple(_unct(x) for x in v)


def _party(v) -> PartyCiphertexts:
    cts = _ct_list(v)
    if len(cts) != 4:
        raise WireError("malformed-json", "party ciphertexts must have 4 entries")
    return PartyCiphertexts.from_list(cts)


def _sig(s: Signature) -> dict:
    return {"r": _hex(s.r_sig), "s": _hex(s.s_sig)}


def _unsig(d) -> Signature:
    if not isinstance(d, dict):
        raise WireError("malformed-json", "signature must be an object")
    return Signature(_unhex(d.get("r")), _unhex(d.get("s")))


# -- messages ---------------------------------------------------------------

def message_to_dict(msg: ProtocolMessage) -> dict:
    d = {"type": type(msg).__name__, "session": msg.session.hex()}
    if isinstance(msg, M1):
        d["p2_ciphertexts"] = [_ct(c) for c in msg.p2_ciphertexts.as_list()]
    elif isinstance(msg, M2):
        d["ea_prime"] = [_ct(c) for c in msg.ea_prime]
        d["p1_ciphertexts"] = [_ct(c) for c in msg.p1_ciphertexts.as_list()]
        d["masks_plain"] = [dict(_signed(v), r=_hex(r)) for v, r in msg.masks_plain]
    elif isinstance(msg, M3):
        d["ea_prime"] = [_ct(c) for c in msg.ea_prime]
        d["sig_p1"] = _sig(msg.sig_p1)
    elif isinstance(msg, M4):
        d["digest"] = msg.digest.hex()
        d["sig_p2"] = _sig(msg.sig_p2)
    elif isinstance(msg, M5):
        d["total"] = _signed(msg.total)
    else:
        raise TypeError(f"not a protocol message: {msg!r}")
    return d


def message_from_dict(d: dict) -> ProtocolMessage:
    if not isinstance(d, dict):
        raise WireError("malformed-json", "payload must be a JSON object")
    kind = d.get("type")
    if kind not in MESSAGE_TYPES:
        raise WireError("unknown-type", repr(kind))
    try:
        session = bytes.fromhex(d["session"])
        if kind == "M1":
            return M1(session, _party(d["p2_ciphertexts"]))
        if kind == "M2":
            masks = d["masks_plain"]
            if not isinstance(masks, list):
                raise WireError("malformed-json", "masks_plain must be a list")
            pairs = tuple((_unsigned(m), _unhex(m.get("r"))) for m in masks)
            return M2(session, _ct_list(d["ea_prime"]), _party(d["p1_ciphertexts"]), pairs)
        if kind == "M3":
            return M3(session, _ct_list(d["ea_prime"]), _unsig(d["sig_p1"]))
        if kind == "M4":
            digest = bytes.fromhex(d["digest"])
            if len(digest) != 32:
                raise WireError("malformed-json", "digest must be 32 bytes")
            return M4(session, digest, _unsig(d["sig_p2"]))
        return M5(session, _unsigned(d["total"]))
    except WireError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise WireError("malformed-json", f"{kind}: {exc}") from exc


def encode_message(msg: ProtocolMessage, params: Optional[GroupParams] = None) -> bytes:
    d = message_to_dict(msg)
    if params is not None:
        d["group"] = params.fingerprint()
    payload = json.dumps(d, separators=(",", ":")).encode("utf-8")
    if len(payload) > MAX_PAYLOAD:
        raise WireError("oversize", f"{len(payload)} bytes")
    return HEADER.pack(len(payload)) + payload


def decode_payload(payload: bytes, params: Optional[GroupParams] = None) -> ProtocolMessage:
    if len(payload) > MAX_PAYLOAD:
        raise WireError("oversize", f"{len(payload)} bytes")
    try:
        d = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WireError("malformed-json", str(exc)) from exc
    if params is not None and isinstance(d, dict) and d.get("group") != params.fingerprint():
        raise WireError("group-mismatch",
                        f"frame group {d.get('group')!r} != local {params.fingerprint()!r}")
    return message_from_dict(d)


def decode_message(frame: bytes, params: Optional[GroupParams] = None) -> ProtocolMessage:
    if len(frame) < HEADER.size:
        raise WireError("malformed", "truncated header")
    (length,) = HEADER.unpack_from(frame)
    if length > MAX_PAYLOAD:
        raise WireError("oversize", f"{length} bytes")
    payload = frame[HEADER.size:]
    if len(payload) != length:
        raise WireError("malformed", f"header says {length} bytes, frame has {len(payload)}")
    return decode_payload(payload, params)
