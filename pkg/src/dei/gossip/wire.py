"""Binary envelope codec for the champion-sharing overlay.

The byte layout is pinned by PROTOCOL.md at the repository root and by
fixture tests; any change here is a wire-protocol version bump.
"""

from __future__ import annotations

import hashlib
import random
import secrets
import struct
from dataclasses import dataclass, field

WIRE_VERSION = 1

KIND_MESSAGE = 1
KIND_IHAVE = 2
KIND_IWANT = 3
KIND_GRAFT = 4
KIND_PRUNE = 5

_KIND_NAMES = {
    KIND_MESSAGE: "MESSAGE",
    KIND_IHAVE: "IHAVE",
    KIND_IWANT: "IWANT",
    KIND_GRAFT: "GRAFT",
    KIND_PRUNE: "PRUNE",
}

PEER_ID_BYTES = 32
PEER_ID_HEX_LEN = 64
MESSAGE_ID_BYTES = 16
MAX_TOPIC_LEN = 256
MAX_IHAVE_IDS = 1024


class WireError(ValueError):
    """Malformed envelope or frame."""


def new_peer_id(rng: random.Random | None = None) -> str:
    """64-char lowercase hex identity (random 32 bytes, no real keypair)."""
    raw = rng.randbytes(PEER_ID_BYTES) if rng is not None else secrets.token_bytes(PEER_ID_BYTES)
    return raw.hex()


def is_peer_id(value: str) -> bool:
    if not isinstance(value, str) or len(value) != PEER_ID_HEX_LEN:
        return False
    return all(c in "0123456789abcdef" for c in value)


def require_peer_id(value: str) -> str:
    if not is_peer_id(value):
        raise WireError(f"not a peer id: {value!r}")
    return value


def compute_message_id(sender: str, seq: int, topic: str, body: bytes) -> str:
    h = hashlib.blake2b(digest_size=MESSAGE_ID_BYTES)
    h.update(bytes.fromhex(sender))
    h.update(struct.pack(">Q", seq))
    h.update(topic.encode("utf-8"))
    h.update(body)
    return h.hexdigest()


@dataclass(frozen=True)
class Envelope:
    kind: int
    sender: str
    topic: str = ""
    seq: int = 0
    body: bytes = b""
    ids: tuple[str, ...] = ()
    message_id: str = ""

    @property
    def kind_name(self) -> str:
        return _KIND_NAMES.get(self.kind, str(self.kind))


def _pack_topic(topic: str) -> bytes:
    raw = topic.encode("utf-8")
    if not raw or len(raw) > MAX_TOPIC_LEN:
        raise WireError(f"topic length {len(raw)} outside 1..{MAX_TOPIC_LEN}")
    return struct.pack(">H", len(raw)) + raw


def _pack_ids(ids: tuple[str, ...]) -> bytes:
    if len(ids) > 0xFFFF:
        raise WireError("too many message ids")
    out = [struct.pack(">H", len(ids))]
    for mid in ids:
        raw = bytes.fromhex(mid)
        if len(raw) != MESSAGE_ID_BYTES:
            raise WireError(f"bad message id {mid!r}")
        out.append(raw)
    return b"".join(out)


def _header(kind: int, sender: str) -> bytes:
    return bytes([WIRE_VERSION, kind]) + bytes.fromhex(require_peer_id(sender))


def encode_message(sender: str, seq: int, topic: str, body: bytes) -> bytes:
    if seq < 0 or seq > 0xFFFFFFFFFFFFFFFF:
        raise WireError(f"sequence {seq} out of range")
    mid = compute_message_id(sender, seq, topic, body)
    return (
        _header(KIND_MESSAGE, sender)
        + struct.pack(">Q", seq)
        + bytes.fromhex(mid)
        + _pack_topic(topic)
        + struct.pack(">I", len(body))
        + body
    )


def encode_ihave(sender: str, topic: str, ids: tuple[str, ...]) -> bytes:
    return _header(KIND_IHAVE, sender) + _pack_topic(topic) + _pack_ids(tuple(ids))


def encode_iwant(sender: str, ids: tuple[str, ...]) -> bytes:
    return _header(KIND_IWANT, sender) + _pack_ids(tuple(ids))


def encode_graft(sender: str, topic: str) -> bytes:
    return _header(KIND_GRAFT, sender) + _pack_topic(topic)


def encode_prune(sender: str, topic: str) -> bytes:
    return _header(KIND_PRUNE, sender) + _pack_topic(topic)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise WireError("truncated envelope")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def topic(self) -> str:
        length = self.u16()
        if not 1 <= length <= MAX_TOPIC_LEN:
            raise WireError(f"topic length {length} outside 1..{MAX_TOPIC_LEN}")
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError as err:
            raise WireError("topic is not UTF-8") from err

    def ids(self) -> tuple[str, ...]:
        count = self.u16()
        return tuple(self.take(MESSAGE_ID_BYTES).hex() for _ in range(count))

    def done(self) -> None:
        if self.pos != len(self.data):
            raise WireError(f"{len(self.data) - self.pos} trailing bytes")


def decode(data: bytes) -> Envelope:
    reader = _Reader(data)
    version = reader.u8()
    if version != WIRE_VERSION:
        raise WireError(f"unsupported wire version {version}")
    kind = reader.u8()
    sender = reader.take(PEER_ID_BYTES).hex()
    if kind == KIND_MESSAGE:
        seq = reader.u64()
        carried_mid = reader.take(MESSAGE_ID_BYTES).hex()
        topic = reader.topic()
        body = reader.take(reader.u32())
        reader.done()
        mid = compute_message_id(sender, seq, topic, body)
        if mid != carried_mid:
            raise WireError("message id does not match content")
        return Envelope(kind=kind, sender=sender, topic=topic, seq=seq, body=body,
                        message_id=mid)
    if kind == KIND_IHAVE:
        topic = reader.topic()
        ids = reader.ids()
        reader.done()
        return Envelope(kind=kind, sender=sender, topic=topic, ids=ids)
    if kind == KIND_IWANT:
        ids = reader.ids()
        reader.done()
        return Envelope(kind=kind, sender=sender, ids=ids)
    if kind in (KIND_GRAFT, KIND_PRUNE):
        topic = reader.topic()
        reader.done()
        return Envelope(kind=kind, sender=sender, topic=topic)
    raise WireError(f"unknown envelope kind {kind}")


MAX_FRAME = 1 << 20


def frame(data: bytes) -> bytes:
    """Length-prefix one envelope for stream transports."""
    if len(data) > MAX_FRAME:
        raise WireError(f"frame of {len(data)} bytes exceeds {MAX_FRAME}")
    return struct.pack(">I", len(data)) + data


class FrameReader:
    """Incremental splitter of a byte stream into frames."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> list[bytes]:
        self._buf.extend(chunk)
        frames = []
        while True:
            if len(self._buf) < 4:
                break
            length = struct.unpack(">I", self._buf[:4])[0]
            if length > MAX_FRAME:
                raise WireError(f"frame of {length} bytes exceeds {MAX_FRAME}")
            if len(self._buf) < 4 + length:
                break
            frames.append(bytes(self._buf[4:4 + length]))
            del self._buf[:4 + length]
        return frames
