"""Asynchronous champion propagation: topic-mesh gossip over pluggable transports."""

from .axl import AxlShim, AxlTransport, create_axl_app, derive_ipv6
from .engine import (
    ControlMessage,
    GossipConfig,
    GossipMessage,
    GossipNode,
    PeerSendError,
    Transport,
    TransportDown,
)
from .simnet import SimNetwork, SimTransport
from .tcp import TcpTransport, compute_backoff, load_peers_file
from .wire import (
    WIRE_VERSION,
    Envelope,
    FrameReader,
    WireError,
    compute_message_id,
    decode,
    encode_graft,
    encode_ihave,
    encode_iwant,
    encode_message,
    encode_prune,
    frame,
    is_peer_id,
    new_peer_id,
    require_peer_id,
)

__all__ = [
    "AxlShim",
    "AxlTransport",
    "ControlMessage",
    "Envelope",
    "FrameReader",
    "GossipConfig",
    "GossipMessage",
    "GossipNode",
    "PeerSendError",
    "SimNetwork",
    "SimTransport",
    "TcpTransport",
    "Transport",
    "TransportDown",
    "WIRE_VERSION",
    "WireError",
    "compute_backoff",
    "compute_message_id",
    "create_axl_app",
    "decode",
    "derive_ipv6",
    "encode_graft",
    "encode_ihave",
    "encode_iwant",
    "encode_message",
    "encode_prune",
    "frame",
    "is_peer_id",
    "load_peers_file",
    "new_peer_id",
    "require_peer_id",
]
