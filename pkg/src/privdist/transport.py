"""Transports that carry encoded frames between the three roles."""

from __future__ import annotations

import socket
import time
from collections import deque
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from .groups import GroupParams
from .protocol import ROLES, ProtocolMessage
from .wire import HEADER, MAX_PAYLOAD, WireError, decode_message, decode_payload, encode_message


class TransportError(ConnectionError):
    pass


Tamper = Callable[[str, str, ProtocolMessage], ProtocolMessage]


class InMemoryTransport:
    """Deterministic single-threaded mailbox transport.

    Every message is encoded to a wire frame and decoded again on receipt, so
    tests exercise the real serialization.  ``tamper(sender, recipient, msg)``
    may replace a message in flight.
    """

    def __init__(self, params: Optional[GroupParams] = None, tamper: Optional[Tamper] = None):
        self.params = params
        self.tamper = tamper
        self.mailboxes: Dict[str, deque] = {r: deque() for r in ROLES}
        self.log: List[Tuple[str, Tuple[str, ...], str, int]] = []

    @property
    def transmissions(self) -> int:
        return len(self.log)

    def send(self, sender: str, recipients: Iterable[str], msg: ProtocolMessage) -> None:
        recipients = tuple(recipients)
        size = 0
        for dst in recipients:
            out = self.tamper(sender, dst, msg) if self.tamper else msg
            frame = encode_message(out, self.params)
            size = max(size, len(frame))
            self.mailboxes[dst].append(frame)
        self.log.append((sender, recipients, type(msg).__name__, size))

    def recv(self, role: str) -> ProtocolMessage:
        box = self.mailboxes[role]
        if not box:
            raise TransportError(f"no pending message for {role}")
        return decode_message(box.popleft(), self.params)


# -- TCP --------------------------------------------------------------------

def parse_addr(text: str) -> Tuple[str, int]:
    host, sep, port = text.strip().rpartition(":")
    if not sep or not host:
        raise ValueError(f"expected host:port, got {text!r}")
    return host, int(port)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    while n:
        try:
            chunk = sock.recv(min(n, 1 << 16))
        except socket.timeout as exc:
            raise TransportError("timed out waiting for peer") from exc
        except OSError as exc:
            raise TransportError(str(exc)) from exc
        if not chunk:
            raise TransportError("connection closed by peer")
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


class FramedConnection:
    """Length-prefixed frames over a connected socket."""

    def __init__(self, sock: socket.socket, params: Optional[GroupParams] = None):
        self.sock = sock
        self.params = params
        self.frames_sent = 0

    @classmethod
    def connect(cls, addr: Tuple[str, int], params=None, timeout: float = 30.0,
                retry_for: float = 0.0) -> "FramedConnection":
        deadline = time.monotonic() + retry_for
        while True:
            try:
                sock = socket.create_connection(addr, timeout=timeout)
                break
            except OSError as exc:
                if time.monotonic() >= deadline:
                    raise TransportError(f"cannot connect to {addr[0]}:{addr[1]}: {exc}") from exc
                time.sleep(0.05)
        sock.settimeout(timeout)
        return cls(sock, params)

    def send_frame(self, frame: bytes) -> None:
        try:
            self.sock.sendall(frame)
        except OSError as exc:
            raise TransportError(str(exc)) from exc
        self.frames_sent += 1

    def send(self, msg: ProtocolMessage) -> None:
        self.send_frame(encode_message(msg, self.params))

    def recv(self) -> ProtocolMessage:
        (length,) = HEADER.unpack(_recv_exact(self.sock, HEADER.size))
        if length > MAX_PAYLOAD:
            raise WireError("oversize", f"{length} bytes")
        return decode_payload(_recv_exact(self.sock, length), self.params)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
