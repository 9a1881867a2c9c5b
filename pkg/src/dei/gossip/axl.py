"""Localhost HTTP message-queue shim with the send/recv/topology surface of
the AXL network daemon, so the gossip layer can run over either this shim or
a real daemon without code changes.

Each node talks only to its own shim: POST /send hands bytes to a
destination peer id, GET /recv polls the inbound queue, GET /topology
reports identity. Shims route to each other in-process when linked
directly, or over HTTP via the internal POST /deliver endpoint.
"""

from __future__ import annotations

import ipaddress
import logging
import threading
from collections import deque

import httpx
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .engine import PeerSendError, TransportDown
from .wire import is_peer_id, require_peer_id

log = logging.getLogger(__name__)

DEST_HEADER = "X-Destination-Peer-Id"
FROM_HEADER = "X-From-Peer-Id"


def derive_ipv6(peer_id: str) -> str:
    """Stable fake overlay address in 200::/7, derived from the identity."""
    raw = bytes.fromhex(require_peer_id(peer_id))
    return str(ipaddress.IPv6Address(bytes([0x02]) + raw[:15]))


class AxlShim:
    """Queue state for one node; exposed over HTTP by create_axl_app()."""

    def __init__(self, peer_id: str):
        self.peer_id = require_peer_id(peer_id)
        self.address = derive_ipv6(peer_id)
        self._inbox: deque[tuple[str, bytes]] = deque()
        self._lock = threading.Lock()
        self._local: dict[str, "AxlShim"] = {}
        self._remote: dict[str, str] = {}

    def link_local(self, other: "AxlShim") -> None:
        self._local[other.peer_id] = other
        other._local[self.peer_id] = self

    def add_remote(self, peer_id: str, base_url: str) -> None:
        self._remote[require_peer_id(peer_id)] = base_url.rstrip("/")

    def peers(self) -> list[str]:
        return sorted(set(self._local) | set(self._remote))

    def enqueue(self, from_id: str, payload: bytes) -> None:
        with self._lock:
            self._inbox.append((from_id, payload))

    def pop(self) -> tuple[str, bytes] | None:
        with self._lock:
            if not self._inbox:
                return None
            return self._inbox.popleft()

    def queue_depth(self) -> int:
        with self._lock:
            return len(self._inbox)

    def route(self, dest: str, payload: bytes, client: httpx.Client | None = None) -> bool:
        """Best-effort fire-and-forget delivery. Returns False for unknown peers."""
        if dest == self.peer_id:
            self.enqueue(self.peer_id, payload)
            return True
        local = self._local.get(dest)
        if local is not None:
            local.enqueue(self.peer_id, payload)
            return True
        url = self._remote.get(dest)
        if url is None:
            return False
        try:
            http = client or httpx.Client(timeout=5.0)
            response = http.post(
                f"{url}/deliver", content=payload, headers={FROM_HEADER: self.peer_id}
            )
            if response.status_code >= 400:
                log.info("deliver to %s returned %d", dest[:8], response.status_code)
        except httpx.HTTPError as err:
            log.info("deliver to %s failed: %s", dest[:8], err)
        return True


def create_axl_app(shim: AxlShim, client: httpx.Client | None = None) -> FastAPI:
    app = FastAPI(title="axl-shim", docs_url=None, redoc_url=None)

    @app.post("/send")
    async def send(request: Request) -> Response:
        dest = request.headers.get(DEST_HEADER)
        if dest is None or not is_peer_id(dest):
            return Response(
                content=f"missing or malformed {DEST_HEADER} header",
                status_code=400,
                media_type="text/plain",
            )
        payload = await request.body()
        if not shim.route(dest, payload, client):
            return Response(
                content=f"unknown peer {dest}", status_code=404, media_type="text/plain"
            )
        return Response(status_code=200)

    @app.post("/deliver")
    async def deliver(request: Request) -> Response:
        from_id = request.headers.get(FROM_HEADER)
        if from_id is None or not is_peer_id(from_id):
            return Response(
                content=f"missing or malformed {FROM_HEADER} header",
                status_code=400,
                media_type="text/plain",
            )
        shim.enqueue(from_id, await request.body())
        return Response(status_code=200)

    @app.get("/recv")
    async def recv() -> Response:
        item = shim.pop()
        if item is None:
            return Response(status_code=204)
        from_id, payload = item
        return Response(
            content=payload,
            status_code=200,
            media_type="application/octet-stream",
            headers={FROM_HEADER: from_id},
        )

    @app.get("/topology")
    async def topology() -> JSONResponse:
        return JSONResponse(
            {
                "peer_id": shim.peer_id,
                "address": shim.address,
                "peers": shim.peers(),
            }
        )

    return app


class AxlTransport:
    """Gossip transport over a node's local shim (or a real daemon with the
    same surface). send() POSTs /send; pump() drains /recv into an engine."""

    def __init__(self, base_url: str, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=5.0)

    def identity(self) -> str:
        data = self.client.get(f"{self.base_url}/topology").json()
        return require_peer_id(data["peer_id"])

    def send(self, dest: str, data: bytes) -> None:
        try:
            response = self.client.post(
                f"{self.base_url}/send", content=data, headers={DEST_HEADER: dest}
            )
        except httpx.HTTPError as err:
            raise TransportDown(f"local shim unreachable: {err}") from err
        if response.status_code >= 400:
            raise PeerSendError(
                f"send to {dest[:8]} rejected with {response.status_code}"
            )

    def poll(self) -> tuple[str, bytes] | None:
        try:
            response = self.client.get(f"{self.base_url}/recv")
        except httpx.HTTPError as err:
            raise TransportDown(f"local shim unreachable: {err}") from err
        if response.status_code == 204:
            return None
        return response.headers[FROM_HEADER], response.content

    def pump(self, node, limit: int = 1000) -> int:
        """Deliver up to `limit` queued frames into the gossip engine."""
        count = 0
        while count < limit:
            item = self.poll()
            if item is None:
                break
            from_peer, data = item
            node.handle_bytes(data, from_peer=from_peer)
            count += 1
        return count
