"""PEM-like key files.

Each file holds one key: a base64 JSON body between BEGIN/END lines.  The
body carries the group (p, g), the key material and a SHA-256 check value
over the other fields; private keys are additionally checked against their
public half when loaded.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
from pathlib import Path
from typing import Tuple, Union

from .groups import EncKeyPair, GroupParams, SigKeyPair, powmod

KINDS = {
    "enc-secret": "PRIVDIST ELGAMAL PRIVATE KEY",
    "enc-public": "PRIVDIST ELGAMAL PUBLIC KEY",
    "sig-secret": "PRIVDIST SIGNING PRIVATE KEY",
    "sig-public": "PRIVDIST SIGNING PUBLIC KEY",
}


class KeyFileError(ValueError):
    pass


def _check(fields: dict) -> str:
    body = json.dumps({k: v for k, v in fields.items() if k != "check"}, sort_keys=True)
    return hashlib.sha256(body.encode()).hexdigest()


def dumps(kind: str, params: GroupParams, **values: int) -> str:
    if kind not in KINDS:
        raise ValueError(f"unknown key kind {kind!r}")
    fields = {"kind": kind, "p": format(params.p, "x"), "g": format(params.g, "x")}
    fields.update({k: format(v, "x") for k, v in values.items()})
    fields["check"] = _check(fields)
    b64 = base64.b64encode(json.dumps(fields, sort_keys=True).encode()).decode()
    lines = [b64[i:i + 64] for i in range(0, len(b64), 64)]
    label = KINDS[kind]
    return "\n".join([f"-----BEGIN {label}-----", *lines, f"-----END {label}-----", ""])


def loads(text: str, kind: str) -> Tuple[GroupParams, dict]:
    label = KINDS[kind]
    begin, end = f"-----BEGIN {label}-----", f"-----END {label}-----"
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if len(lines) < 3 or lines[0] != begin or lines[-1] != end:
        raise KeyFileError(f"not a {label} file")
    try:
        fields = json.loads(base64.b64decode("".join(lines[1:-1]), validate=True))
    except (ValueError, TypeError) as exc:
        raise KeyFileError(f"corrupt key body: {exc}") from exc
    if not isinstance(fields, dict) or fields.get("kind") != kind:
        raise KeyFileError("key kind mismatch")
    if fields.get("check") != _check(fields):
        raise KeyFileError("integrity check failed")
    try:
        ints = {k: int(v, 16) for k, v in fields.items() if k not in ("kind", "check")}
    except (TypeError, ValueError) as exc:
        raise KeyFileError(f"bad integer field: {exc}") from exc
    p, g = ints.pop("p"), ints.pop("g")
    return GroupParams(p=p, q=(p - 1) // 2, g=g), ints


def _write(path: Path, text: str, secret: bool) -> None:
    path.write_text(text)
    if secret:
        os.chmod(path, 0o600)


def save_enc_keys(directory: Union[str, Path], stem: str, params: GroupParams,
                  keys: EncKeyPair) -> Tuple[Path, Path]:
    d = Path(directory)
    sec, pub = d / f"{stem}.key", d / f"{stem}.pub"
    _write(sec, dumps("enc-secret", params, s=keys.s, y=keys.y), True)
    _write(pub, dumps("enc-public", params, y=keys.y), False)
    return sec, pub


def save_sig_keys(directory: Union[str, Path], stem: str, params: GroupParams,
                  keys: SigKeyPair) -> Tuple[Path, Path]:
    d = Path(directory)
    sec, pub = d / f"{stem}.sig.key", d / f"{stem}.sig.pub"
    _write(sec, dumps("sig-secret", params, x=keys.x, v=keys.v), True)
    _write(pub, dumps("sig-public", params, v=keys.v), False)
    return sec, pub


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise KeyFileError(f"cannot read {path}: {exc}") from exc


def load_enc_secret(path) -> Tuple[GroupParams, EncKeyPair]:
    params, f = loads(_read(path), "enc-secret")
    if powmod(params.g, f["s"], params.p) != f["y"]:
        raise KeyFileError("public half does not match the secret exponent")
    return params, EncKeyPair(s=f["s"], y=f["y"])


def load_enc_public(path) -> Tuple[GroupParams, int]:
    params, f = loads(_read(path), "enc-public")
    return params, f["y"]


def load_sig_secret(path) -> Tuple[GroupParams, SigKeyPair]:
    params, f = loads(_read(path), "sig-secret")
    if powmod(params.g, f["x"], params.p) != f["v"]:
        raise KeyFileError("public half does not match the secret exponent")
    return params, SigKeyPair(x=f["x"], v=f["v"])


def load_sig_public(path) -> Tuple[GroupParams, int]:
    params, f = loads(_read(path), "sig-public")
    return params, f["v"]
