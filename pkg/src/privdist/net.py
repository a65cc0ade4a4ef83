"""Run each role as a separate process over TCP.

Topology: P1 listens for P2 (M1 in, M2 out); both users connect to C, which
identifies each connection by its first frame (M3 from P1, M4 from P2) and
groups them by session id.  C answers both connections with the same M5.
"""

from __future__ import annotations

import dataclasses
import logging
import socket
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .groups import EncKeyPair, SigKeyPair
from .haversine import GeoPoint
from .protocol import (
    M3,
    M4,
    ControlCenter,
    Party1,
    Party2,
    ProtocolConfig,
    ProtocolError,
)
from .transport import FramedConnection, TransportError
from .wire import WireError

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0


@dataclass
class PartyOutcome:
    distance: float
    exponentiations: int
    frames_sent: int


def listen(addr: Tuple[str, int]) -> socket.socket:
    return socket.create_server(addr)


def run_p1(cfg: ProtocolConfig, point: GeoPoint, sig_key: SigKeyPair,
           listener: socket.socket, c_addr: Tuple[str, int], rng=None,
           timeout: float = DEFAULT_TIMEOUT) -> PartyOutcome:
    party = Party1(cfg, point, sig_key, rng)
    listener.settimeout(timeout)
    try:
        sock, _ = listener.accept()
    except socket.timeout as exc:
        raise TransportError("no connection from P2") from exc
    finally:
        listener.close()
    sock.settimeout(timeout)
    sent = 0
    with FramedConnection(sock, cfg.group) as peer:
        m2, m3 = party.on_m1(peer.recv())
        peer.send(m2)
        sent += peer.frames_sent
    with FramedConnection.connect(c_addr, cfg.group, timeout, retry_for=timeout) as center:
        center.send(m3)
        sent += center.frames_sent
        d = party.on_m5(center.recv())
    return PartyOutcome(d, party.counter.count, sent)


def run_p2(cfg: ProtocolConfig, point: GeoPoint, sig_key: SigKeyPair,
           p1_addr: Tuple[str, int], c_addr: Tuple[str, int], rng=None,
           timeout: float = DEFAULT_TIMEOUT) -> PartyOutcome:
    party = Party2(cfg, point, sig_key, rng)
    sent = 0
    with FramedConnection.connect(p1_addr, cfg.group, timeout, retry_for=timeout) as peer:
        peer.send(party.start())
        sent += peer.frames_sent
        m2 = peer.recv()
    m4 = party.on_m2(m2)
    with FramedConnection.connect(c_addr, cfg.group, timeout, retry_for=timeout) as center:
        center.send(m4)
        sent += center.frames_sent
        d = party.on_m5(center.recv())
    return PartyOutcome(d, party.counter.count, sent)


@dataclass
class SessionAudit:
    session: bytes
    n: int
    status: str = "pending"
    reason: str = ""
    exponentiations: int = 0

    def line(self) -> str:
        text = f"session={self.session.hex() or '-'} N={self.n} status={self.status}"
        if self.reason:
            text += f" reason={self.reason}"
        return text + f" exps={self.exponentiations}"


@dataclass
class _SessionState:
    center: ControlCenter
    audit: SessionAudit
    conns: List[FramedConnection] = field(default_factory=list)
    done: threading.Event = field(default_factory=threading.Event)
    lock: threading.Lock = field(default_factory=threading.Lock)


class ControlCenterServer:
    """Serves sessions; each session id gets its own isolated ControlCenter."""

    def __init__(self, base_cfg: ProtocolConfig, keys: EncKeyPair, listener: socket.socket,
                 timeout: float = DEFAULT_TIMEOUT, max_sessions: int = 1,
                 on_audit: Optional[Callable[[SessionAudit], None]] = None, rng=None):
        self.base_cfg = base_cfg
        self.keys = keys
        self.listener = listener
        self.timeout = timeout
        self.max_sessions = max_sessions
        self.on_audit = on_audit
        self.rng = rng
        self.audits: List[SessionAudit] = []
        self.broadcasts = 0
        self._sessions: Dict[bytes, _SessionState] = {}
        self._lock = threading.Lock()
        self._finished = 0
        self._stop = threading.Event()

    def stop(self) -> None:
        self._stop.set()

    def serve(self) -> List[SessionAudit]:
        self.listener.settimeout(0.1)
        workers = []
        try:
            while not self._stop.is_set():
                try:
                    sock, _ = self.listener.accept()
                except socket.timeout:
                    continue
                sock.settimeout(self.timeout)
                t = threading.Thread(target=self._handle, args=(sock,), daemon=True)
                t.start()
                workers.append(t)
        finally:
            self.listener.close()
        for t in workers:
            t.join(self.timeout)
        return self.audits

    def _state_for(self, session: bytes) -> _SessionState:
        st = self._sessions.get(session)
        if st is None:
            cfg = dataclasses.replace(self.base_cfg, session_id=session)
            st = _SessionState(ControlCenter(cfg, self.keys, self.rng),
                               SessionAudit(session, cfg.n))
            self._sessions[session] = st
        return st

    def _finish(self, st: _SessionState, status: str, reason: str = "") -> None:
        if st.done.is_set():
            return
        st.audit.status = status
        st.audit.reason = reason
        st.audit.exponentiations = st.center.counter.count
        self.audits.append(st.audit)
        st.done.set()
        if self.on_audit:
            self.on_audit(st.audit)
        self._finished += 1
        if self.max_sessions and self._finished >= self.max_sessions:
            self._stop.set()

    def _handle(self, sock: socket.socket) -> None:
        conn = FramedConnection(sock, self.base_cfg.group)
        try:
            msg = conn.recv()
        except (TransportError, WireError) as exc:
            log.warning("dropping connection: %s", exc)
            conn.close()
            return
        if not isinstance(msg, (M3, M4)):
            log.warning("unexpected first frame %s", type(msg).__name__)
            conn.close()
            return
        with self._lock:
            st = self._state_for(msg.session)
        with st.lock:
            st.conns.append(conn)
            status, reason, m5 = "ok", "", None
            try:
                m5 = st.center.receive(msg)
            except ProtocolError as exc:
                status, reason = "rejected", exc.reason
            if m5 is not None:
                # one broadcast, delivered on both users' connections
                for c in st.conns:
                    try:
                        c.send(m5)
                    except TransportError as exc:
                        log.warning("could not deliver M5: %s", exc)
            if m5 is not None or status != "ok":
                with self._lock:
                    if m5 is not None:
                        self.broadcasts += 1
                    self._finish(st, status, reason)
        if not st.done.wait(self.timeout):
            with self._lock:
                self._finish(st, "timeout", "missing M3 or M4")
        conn.close()
