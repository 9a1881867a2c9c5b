"""Framed TCP transport: one outbound stream per peer, reconnect with
exponential backoff, length-prefixed envelopes.

A connection opens with a hello frame identifying the dialing peer; every
later frame is one gossip envelope handed to the receive callback. Streams
are unidirectional (each side dials its own outbound connection), which
keeps reconnect logic trivial.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
from typing import Callable

from .engine import PeerSendError, TransportDown
from .wire import PEER_ID_BYTES, FrameReader, WireError, frame, is_peer_id, require_peer_id

log = logging.getLogger(__name__)

HELLO_MAGIC = b"\x00HELLO"
BASE_BACKOFF = 0.5
MAX_BACKOFF = 30.0
_STOP = object()


def compute_backoff(attempt: int, base: float = BASE_BACKOFF, cap: float = MAX_BACKOFF) -> float:
    """Delay before reconnect attempt `attempt` (0-based): base * 2^attempt, capped."""
    return min(base * (2.0 ** attempt), cap)


def hello_frame(peer_id: str) -> bytes:
    return frame(HELLO_MAGIC + bytes.fromhex(require_peer_id(peer_id)))


def parse_hello(data: bytes) -> str | None:
    if data.startswith(HELLO_MAGIC) and len(data) == len(HELLO_MAGIC) + PEER_ID_BYTES:
        return data[len(HELLO_MAGIC):].hex()
    return None


def load_peers_file(path: str) -> dict[str, tuple[str, int]]:
    """Parse `peer_id host:port` lines; '#' starts a comment."""
    peers: dict[str, tuple[str, int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                peer_id, addr = line.split()
                host, port_text = addr.rsplit(":", 1)
                port = int(port_text)
            except ValueError as err:
                raise ValueError(f"{path}:{lineno}: expected 'peer_id host:port'") from err
            if not is_peer_id(peer_id):
                raise ValueError(f"{path}:{lineno}: bad peer id {peer_id!r}")
            peers[peer_id] = (host, port)
    return peers


class _PeerSender(threading.Thread):
    """Owns the outbound connection to one peer: dial, hello, drain queue."""

    def __init__(self, transport: "TcpTransport", dest: str, addr: tuple[str, int]):
        super().__init__(daemon=True, name=f"tcp-send-{dest[:8]}")
        self.transport = transport
        self.dest = dest
        self.addr = addr
        self.outbox: queue.Queue = queue.Queue()
        self._sock: socket.socket | None = None

    def run(self) -> None:
        attempt = 0
        pending: object | None = None
        while not self.transport.stopped.is_set():
            if pending is None:
                pending = self.outbox.get()
            if pending is _STOP:
                break
            if self._sock is None:
                try:
                    self._sock = socket.create_connection(self.addr, timeout=5.0)
                    self._sock.sendall(hello_frame(self.transport.peer_id))
                    attempt = 0
                except OSError as err:
                    delay = compute_backoff(attempt)
                    attempt += 1
                    log.info("dial %s failed (%s); retry in %.1fs", self.dest[:8], err, delay)
                    if self.transport.stopped.wait(delay):
                        break
                    continue
            try:
                self._sock.sendall(frame(pending))  # type: ignore[arg-type]
                pending = None
            except OSError as err:
                log.info("send to %s failed (%s); reconnecting", self.dest[:8], err)
                self._close()
        self._close()

    def _close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None


class TcpTransport:
    """Engine-facing transport. send() never blocks on the network: frames
    are queued per peer and shipped by that peer's sender thread."""

    def __init__(
        self,
        peer_id: str,
        on_bytes: Callable[[bytes, str | None], None],
        listen_host: str = "127.0.0.1",
        listen_port: int = 0,
        peers: dict[str, tuple[str, int]] | None = None,
    ):
        self.peer_id = require_peer_id(peer_id)
        self.on_bytes = on_bytes
        self.listen_host = listen_host
        self.listen_port = listen_port
        self.stopped = threading.Event()
        self._senders: dict[str, _PeerSender] = {}
        self._lock = threading.Lock()
        self._listener: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._peers = dict(peers or {})

    def start(self) -> tuple[str, int]:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.listen_host, self.listen_port))
        listener.listen(32)
        self._listener = listener
        self.listen_host, self.listen_port = listener.getsockname()
        acceptor = threading.Thread(target=self._accept_loop, daemon=True, name="tcp-accept")
        acceptor.start()
        self._threads.append(acceptor)
        return (self.listen_host, self.listen_port)

    def add_peer(self, peer_id: str, addr: tuple[str, int]) -> None:
        self._peers[require_peer_id(peer_id)] = addr

    def peer_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._peers))

    def send(self, dest: str, data: bytes) -> None:
        if self.stopped.is_set():
            raise TransportDown("transport stopped")
        with self._lock:
            sender = self._senders.get(dest)
            if sender is None:
                addr = self._peers.get(dest)
                if addr is None:
                    raise PeerSendError(f"no address for peer {dest[:8]}")
                sender = _PeerSender(self, dest, addr)
                self._senders[dest] = sender
                sender.start()
        sender.outbox.put(data)

    def stop(self) -> None:
        self.stopped.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._lock:
            for sender in self._senders.values():
                sender.outbox.put(_STOP)
                sender._close()

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self.stopped.is_set():
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            reader = threading.Thread(
                target=self._read_loop, args=(conn,), daemon=True, name="tcp-read"
            )
            reader.start()
            self._threads.append(reader)

    def _read_loop(self, conn: socket.socket) -> None:
        splitter = FrameReader()
        from_peer: str | None = None
        with conn:
            while not self.stopped.is_set():
                try:
                    chunk = conn.recv(65536)
                except OSError:
                    return
                if not chunk:
                    return
                try:
                    frames = splitter.feed(chunk)
                except WireError as err:
                    log.warning("closing stream: %s", err)
                    return
                for data in frames:
                    hello = parse_hello(data)
                    if hello is not None:
                        from_peer = hello
                        continue
                    self.on_bytes(data, from_peer)
