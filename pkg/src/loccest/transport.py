"""Classical channels between Alice and Bob.

Both transports deliver :class:`PartyMessage` objects in order and enforce
two invariants on the receiving side: the protocol version must match, and
round numbers from a given sender must strictly increase. The line
protocol frames every message as one UTF-8 JSON object per line.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import dataclass, field

from .errors import ProtocolError

PROTOCOL_VERSION = 1
SENDERS = ("alice", "bob")


@dataclass(frozen=True)
class PartyMessage:
    round: int
    sender: str
    payload: dict = field(hash=False)
    protocol_version: int = PROTOCOL_VERSION

    def to_dict(self) -> dict:
        return {"round": self.round, "sender": self.sender, "payload": self.payload,
                "protocol_version": self.protocol_version}

    @classmethod
    def from_dict(cls, d: dict) -> "PartyMessage":
        try:
            msg = cls(int(d["round"]), str(d["sender"]), dict(d["payload"]),
                      int(d["protocol_version"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed message: {exc}") from exc
        if msg.sender not in SENDERS:
            raise ProtocolError(f"unknown sender {msg.sender!r}")
        return msg

    def encode(self) -> bytes:
        return (json.dumps(self.to_dict(), separators=(",", ":"), sort_keys=True) + "\n").encode("utf-8")

    @classmethod
    def decode(cls, line: bytes) -> "PartyMessage":
        if not line.endswith(b"\n"):
            raise ProtocolError("truncated frame")
        try:
            d = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"malformed frame: {exc}") from exc
        if not isinstance(d, dict):
            raise ProtocolError("frame is not a JSON object")
        return cls.from_dict(d)


class BytePipe:
    """Unidirectional in-memory byte stream with ``write`` and ``readline``."""

    def __init__(self):
        self._buf = bytearray()
        self._cond = threading.Condition()
        self.closed = False

    def write(self, data: bytes) -> int:
        with self._cond:
            self._buf.extend(data)
            self._cond.notify_all()
        return len(data)

    def flush(self):
        pass

    def close(self):
        with self._cond:
            self.closed = True
            self._cond.notify_all()

    def has_line(self) -> bool:
        with self._cond:
            return b"\n" in self._buf

    def readline(self, timeout: float | None = None) -> bytes:
        with self._cond:
            if not self._cond.wait_for(lambda: b"\n" in self._buf or self.closed, timeout):
                raise ProtocolError("timed out waiting for a frame")
            i = self._buf.find(b"\n")
            if i < 0:
                rest, self._buf = bytes(self._buf), bytearray()
                return rest
            line = bytes(self._buf[:i + 1])
            del self._buf[:i + 1]
            return line


class Endpoint:
    """One party's end of a bidirectional channel."""

    def __init__(self, owner: str):
        self.owner = owner
        self._last_round: dict[str, int] = {}

    def _check(self, msg: PartyMessage) -> PartyMessage:
        if msg.protocol_version != PROTOCOL_VERSION:
            raise ProtocolError(f"protocol version {msg.protocol_version} != {PROTOCOL_VERSION}")
        last = self._last_round.get(msg.sender, -1)
        if msg.round <= last:
            raise ProtocolError(f"round {msg.round} from {msg.sender} after round {last}")
        self._last_round[msg.sender] = msg.round
        return msg

    def send(self, msg: PartyMessage) -> None:
        raise NotImplementedError

    def ready(self) -> bool:
        raise NotImplementedError

    def recv(self, timeout: float | None = None) -> PartyMessage:
        raise NotImplementedError


class _Queue:
    def __init__(self):
        self.items = deque()
        self.cond = threading.Condition()


class MemoryEndpoint(Endpoint):
    def __init__(self, owner, outbox: _Queue, inbox: _Queue):
        super().__init__(owner)
        self._out, self._in = outbox, inbox

    def send(self, msg):
        with self._out.cond:
            self._out.items.append(msg)
            self._out.cond.notify_all()

    def ready(self):
        with self._in.cond:
            return bool(self._in.items)

    def recv(self, timeout=None):
        with self._in.cond:
            if not self._in.cond.wait_for(lambda: bool(self._in.items), timeout):
                raise ProtocolError("timed out waiting for a message")
            msg = self._in.items.popleft()
        return self._check(msg)


class LineEndpoint(Endpoint):
    def __init__(self, owner, writer, reader):
        super().__init__(owner)
        self._w, self._r = writer, reader

    def send(self, msg):
        self._w.write(msg.encode())
        self._w.flush()

    def ready(self):
        has_line = getattr(self._r, "has_line", None)
        return True if has_line is None else has_line()

    def recv(self, timeout=None):
        if isinstance(self._r, BytePipe):
            line = self._r.readline(timeout)
        else:
            line = self._r.readline()
        if not line:
            raise ProtocolError("stream closed")
        return self._check(PartyMessage.decode(line))


def in_memory() -> tuple[MemoryEndpoint, MemoryEndpoint]:
    """Connected (alice, bob) endpoints passing message objects directly."""
    ab, ba = _Queue(), _Queue()
    return MemoryEndpoint("alice", ab, ba), MemoryEndpoint("bob", ba, ab)


def line_protocol(a_to_b=None, b_to_a=None) -> tuple[LineEndpoint, LineEndpoint]:
    """(alice, bob) endpoints over a pair of byte streams.

    A stream is either one object with ``write`` and ``readline`` (such as
    :class:`BytePipe`) or a ``(writer, reader)`` pair of binary files, e.g.
    the two ends of ``os.pipe()``. Fresh byte pipes are used when omitted.
    """
    ab_w, ab_r = _ends(a_to_b)
    ba_w, ba_r = _ends(b_to_a)
    return LineEndpoint("alice", ab_w, ba_r), LineEndpoint("bob", ba_w, ab_r)


def _ends(stream):
    if stream is None:
        stream = BytePipe()
    if isinstance(stream, tuple):
        return stream
    return stream, stream
