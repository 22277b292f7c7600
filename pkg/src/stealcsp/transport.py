"""Inter-team messages, their frame encoding and two transports.

Frame layout (all little-endian)::

    u32 length   bytes that follow the length field (5 + payload)
    u16 src      sending team (MAIN for the main controller)
    u16 dst      receiving team
    u8  kind     REQUEST_WORK=1 ... TERMINATE=7
    payload      u16 team id (REQUEST_WORK, TEAM_IDLE), an encoded store
                 (SUPPLY_WORK), u16 count + one byte per value (SOLUTION),
                 or nothing

``InProcessHub`` moves frames between endpoints through per-pair FIFO
queues inside one process; with ``manual=True`` nothing is delivered until a
test calls ``deliver``.  ``SocketEndpoint`` speaks the same frames over one
TCP connection per team pair, opened lazily and introduced by a 4-byte
team-id handshake.
"""
from __future__ import annotations

import enum
import logging
import queue
import socket
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .core import CodecError, store_decode, store_encode

log = logging.getLogger(__name__)

MAIN = 0xFFFF

_HEADER = struct.Struct("<IHHB")
_TEAM = struct.Struct("<H")
_HANDSHAKE = struct.Struct("<I")


class TransportError(RuntimeError):
    """The peer cannot be reached (closed, terminated or faulted)."""


class Kind(enum.IntEnum):
    REQUEST_WORK = 1
    SUPPLY_WORK = 2
    NO_WORK = 3
    SOLUTION = 4
    TEAM_IDLE = 5
    STOP = 6
    TERMINATE = 7


@dataclass(frozen=True)
class Message:
    kind: Kind
    team: Optional[int] = None     # REQUEST_WORK, TEAM_IDLE
    store: Optional[tuple] = None  # SUPPLY_WORK
    values: Optional[tuple] = None  # SOLUTION

    @classmethod
    def request_work(cls, from_team):
        return cls(Kind.REQUEST_WORK, team=from_team)

    @classmethod
    def supply_work(cls, store):
        return cls(Kind.SUPPLY_WORK, store=tuple(store))

    @classmethod
    def solution(cls, values):
        return cls(Kind.SOLUTION, values=tuple(values))

    @classmethod
    def team_idle(cls, team):
        return cls(Kind.TEAM_IDLE, team=team)


NO_WORK = Message(Kind.NO_WORK)
STOP = Message(Kind.STOP)
TERMINATE = Message(Kind.TERMINATE)


def _payload(msg: Message) -> bytes:
    k = msg.kind
    if k in (Kind.REQUEST_WORK, Kind.TEAM_IDLE):
        return _TEAM.pack(msg.team)
    if k is Kind.SUPPLY_WORK:
        return store_encode(msg.store)
    if k is Kind.SOLUTION:
        return struct.pack(f"<H{len(msg.values)}B", len(msg.values), *msg.values)
    return b""


def encode(src: int, dst: int, msg: Message) -> bytes:
    body = _payload(msg)
    return _HEADER.pack(5 + len(body), src, dst, int(msg.kind)) + body


def _decode_payload(kind: Kind, body: bytes) -> Message:
    if kind in (Kind.REQUEST_WORK, Kind.TEAM_IDLE):
        if len(body) != 2:
            raise CodecError(f"{kind.name} payload must be 2 bytes, got {len(body)}")
        return Message(kind, team=_TEAM.unpack(body)[0])
    if kind is Kind.SUPPLY_WORK:
        return Message(kind, store=store_decode(body))
    if kind is Kind.SOLUTION:
        if len(body) < 2:
            raise CodecError("truncated SOLUTION payload")
        (n,) = _TEAM.unpack_from(body)
        if len(body) != 2 + n:
            raise CodecError(f"SOLUTION of {n} values needs {2 + n} bytes, got {len(body)}")
        return Message(kind, values=tuple(body[2:]))
    if body:
        raise CodecError(f"{kind.name} carries no payload, got {len(body)} bytes")
    return Message(kind)


def decode(frame: bytes) -> tuple[int, int, Message]:
    """Decode one complete frame into ``(src, dst, message)``."""
    if len(frame) < _HEADER.size:
        raise CodecError(f"truncated frame: {len(frame)} bytes")
    length, src, dst, kind = _HEADER.unpack_from(frame)
    if length != len(frame) - 4:
        raise CodecError(f"frame length field says {length}, frame has {len(frame) - 4}")
    try:
        kind = Kind(kind)
    except ValueError:
        raise CodecError(f"unknown message kind {kind}") from None
    return src, dst, _decode_payload(kind, bytes(frame[_HEADER.size:]))


@dataclass(frozen=True)
class TraceEntry:
    time: float
    src: int
    dst: int
    kind: Kind


# -- in-process backend -------------------------------------------------------

class InProcessHub:
    """Routes frames between endpoints living in the same process."""

    def __init__(self, manual: bool = False):
        self.manual = manual
        self._lock = threading.Lock()
        self._inbox: dict[int, queue.Queue] = {}
        self._closed: set[int] = set()
        self._pending: dict[tuple[int, int], deque] = {}
        self.trace: list[TraceEntry] = []

    def endpoint(self, team_id: int) -> "InProcessEndpoint":
        with self._lock:
            if team_id in self._inbox:
                raise ValueError(f"endpoint {team_id} already exists")
            self._inbox[team_id] = queue.Queue()
        return InProcessEndpoint(self, team_id)

    def _send(self, src: int, dst: int, msg: Message) -> None:
        frame = encode(src, dst, msg)
        with self._lock:
            if dst not in self._inbox or dst in self._closed:
                raise TransportError(f"team {dst} is not reachable")
            self.trace.append(TraceEntry(time.perf_counter(), src, dst, msg.kind))
            if self.manual:
                self._pending.setdefault((src, dst), deque()).append(frame)
                return
            self._inbox[dst].put(frame)

    # scripted delivery
    def pending(self) -> list[tuple[int, int]]:
        with self._lock:
            return [pair for pair, q in self._pending.items() if q]

    def deliver(self, src: int, dst: int) -> Message:
        """Move the oldest frame of the ``src -> dst`` pair to its inbox."""
        with self._lock:
            frame = self._pending[src, dst].popleft()
            self._inbox[dst].put(frame)
        return decode(frame)[2]

    def _receive(self, team_id: int, timeout):
        q = self._inbox[team_id]
        try:
            frame = q.get(timeout=timeout) if timeout != 0 else q.get_nowait()
        except queue.Empty:
            return None
        if frame is None:
            return None
        src, _, msg = decode(frame)
        return src, msg

    def _close(self, team_id: int) -> None:
        with self._lock:
            self._closed.add(team_id)
            self._inbox[team_id].put(None)

    def undelivered(self) -> int:
        with self._lock:
            waiting = sum(len(q) for q in self._pending.values())
            for tid, q in self._inbox.items():
                waiting += sum(1 for f in list(q.queue) if f is not None)
            return waiting

    def assert_drained(self) -> None:
        left = self.undelivered()
        if left:
            raise AssertionError(f"{left} messages were never received")


class InProcessEndpoint:
    def __init__(self, hub: InProcessHub, team_id: int):
        self.hub = hub
        self.team_id = team_id

    def send(self, dst: int, msg: Message) -> None:
        self.hub._send(self.team_id, dst, msg)

    def receive(self, timeout: Optional[float] = None):
        """``(src, message)``, or ``None`` on timeout or after ``close``."""
        return self.hub._receive(self.team_id, timeout)

    def close(self) -> None:
        self.hub._close(self.team_id)


# -- socket backend -----------------------------------------------------------

def _recv_exact(sock: socket.socket, size: int) -> bytes:
    buf = bytearray()
    while len(buf) < size:
        chunk = sock.recv(size - len(buf))
        if not chunk:
            raise CodecError(f"connection closed after {len(buf)} of {size} bytes")
        buf.extend(chunk)
    return bytes(buf)


def read_frame(sock: socket.socket) -> bytes:
    head = sock.recv(4)
    if not head:
        raise EOFError
    if len(head) < 4:
        head += _recv_exact(sock, 4 - len(head))
    (length,) = struct.unpack("<I", head)
    if length < 5:
        raise CodecError(f"frame length {length} is below the header size")
    return head + _recv_exact(sock, length)


class SocketEndpoint:
    """Socket transport for one team.

    ``addresses`` maps team ids (and ``MAIN``) to ``(host, port)``; it may be
    filled in after construction, before the first ``send``.  A listening
    socket is bound immediately so the port can be published.
    """

    def __init__(self, team_id: int, host: str = "127.0.0.1", port: int = 0, addresses: Optional[dict] = None):
        self.team_id = team_id
        self.addresses = dict(addresses or {})
        self._server = socket.create_server((host, port))
        self.address = self._server.getsockname()[:2]
        self._inbox: queue.Queue = queue.Queue()
        self._conns: dict[int, socket.socket] = {}
        self._send_locks: dict[int, threading.Lock] = {}
        self._lock = threading.Lock()
        self._closed = False
        self.faulted: list[str] = []
        self._threads = [threading.Thread(target=self._accept_loop, daemon=True)]
        self._threads[0].start()

    def _accept_loop(self):
        while not self._closed:
            try:
                conn, _ = self._server.accept()
            except OSError:
                return
            try:
                (peer,) = _HANDSHAKE.unpack(_recv_exact(conn, _HANDSHAKE.size))
            except (OSError, CodecError):
                conn.close()
                continue
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            with self._lock:
                if peer not in self._conns:
                    self._conns[peer] = conn
                    self._send_locks[peer] = threading.Lock()
            self._spawn_reader(conn, peer)

    def _spawn_reader(self, conn, peer):
        t = threading.Thread(target=self._read_loop, args=(conn, peer), daemon=True)
        t.start()
        self._threads.append(t)

    def _read_loop(self, conn, peer):
        while True:
            try:
                frame = read_frame(conn)
                src, _, msg = decode(frame)
            except EOFError:
                break
            except CodecError as exc:
                self.faulted.append(f"connection from {peer}: {exc}")
                log.warning("team %s: faulted connection from %s: %s", self.team_id, peer, exc)
                break
            except OSError:
                break
            self._inbox.put((src, msg))
        with self._lock:
            if self._conns.get(peer) is conn:
                del self._conns[peer]
        try:
            conn.close()
        except OSError:
            pass

    def _connection(self, dst):
        with self._lock:
            conn = self._conns.get(dst)
            if conn is not None:
                return conn, self._send_locks[dst]
        if dst not in self.addresses:
            raise TransportError(f"no address for team {dst}")
        try:
            conn = socket.create_connection(tuple(self.addresses[dst]), timeout=5)
            conn.settimeout(None)
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn.sendall(_HANDSHAKE.pack(self.team_id))
        except OSError as exc:
            raise TransportError(f"team {dst} unreachable: {exc}") from exc
        with self._lock:
            existing = self._conns.get(dst)
            if existing is not None:
                keep = existing
            else:
                self._conns[dst] = keep = conn
                self._send_locks[dst] = threading.Lock()
            lock = self._send_locks[dst]
        self._spawn_reader(conn, dst)
        return keep, lock

    def send(self, dst: int, msg: Message) -> None:
        if self._closed:
            raise TransportError("endpoint closed")
        conn, lock = self._connection(dst)
        frame = encode(self.team_id, dst, msg)
        try:
            with lock:
                conn.sendall(frame)
        except OSError as exc:
            raise TransportError(f"send to team {dst} failed: {exc}") from exc

    def receive(self, timeout: Optional[float] = None):
        try:
            item = self._inbox.get(timeout=timeout) if timeout != 0 else self._inbox.get_nowait()
        except queue.Empty:
            return None
        return item

    def close(self) -> None:
        self._closed = True
        self._inbox.put(None)
        try:
            # shutdown wakes the blocked accept(); close alone leaves it listening
            self._server.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._server.close()
        except OSError:
            pass
        with self._lock:
            conns = list(self._conns.values())
            self._conns.clear()
        for c in conns:
            try:
                c.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            c.close()
