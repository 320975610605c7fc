"""Byte-channel transports and framed connections.

A channel is a duplex, ordered, reliable byte stream: the in-process
loopback pair used by tests and headless runs, or a TCP socket for live
serving. FrameConnection layers the wire format on any channel and
reassembles messages across arbitrary fragmentation. A disconnect
surfaces as ChannelClosed; the session owner reacts with a safe-stop.
"""

from __future__ import annotations

import socket
from collections import deque

from .messages import FrameDecoder, Message, encode


class ChannelClosed(ConnectionError):
    """Peer closed the byte channel."""


class LoopbackChannel:
    """One endpoint of an in-process duplex pair."""

    def __init__(self):
        self._inbox: deque[bytes] = deque()
        self._peer: LoopbackChannel | None = None
        self._closed = False

    def send(self, data: bytes) -> None:
        if self._closed or self._peer._closed:
            raise ChannelClosed("loopback channel closed")
        self._peer._inbox.append(bytes(data))

    def recv(self) -> bytes:
        """Next pending chunk; b'' when nothing is queued."""
        if self._inbox:
            return self._inbox.popleft()
        if self._closed or (self._peer and self._peer._closed):
            raise ChannelClosed("loopback channel closed")
        return b""

    def close(self) -> None:
        self._closed = True


def loopback_pair() -> tuple[LoopbackChannel, LoopbackChannel]:
    a, b = LoopbackChannel(), LoopbackChannel()
    a._peer, b._peer = b, a
    return a, b


class TcpChannel:
    """Blocking TCP byte channel (client side or accepted socket)."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    @classmethod
    def connect(cls, host: str, port: int, timeout: float = 5.0) -> "TcpChannel":
        sock = socket.create_connection((host, port), timeout=timeout)
        sock.settimeout(None)
        return cls(sock)

    def send(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise ChannelClosed(str(exc)) from exc

    def recv(self, max_bytes: int = 65536) -> bytes:
        try:
            data = self._sock.recv(max_bytes)
        except OSError as exc:
            raise ChannelClosed(str(exc)) from exc
        if data == b"":
            raise ChannelClosed("peer closed connection")
        return data

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class FrameConnection:
    """Message-level view of a byte channel."""

    def __init__(self, channel):
        self.channel = channel
        self._decoder = FrameDecoder()

    def send(self, msg: Message) -> None:
        self.channel.send(encode(msg))

    def poll(self) -> list[Message]:
        """Drain whatever bytes are pending; non-blocking for loopback.
        Messages already received are delivered even if the peer has
        closed; the closure itself surfaces on the next call."""
        out = []
        while True:
            try:
                data = self.channel.recv()
            except ChannelClosed:
                if out:
                    return out
                raise
            if not data:
                break
            out.extend(self._decoder.feed(data))
            if not isinstance(self.channel, LoopbackChannel):
                break
        return out

    def recv_blocking(self) -> list[Message]:
        """Block until at least one full message arrives (TCP)."""
        while True:
            data = self.channel.recv()
            if not data:
                raise ChannelClosed("channel drained")
            msgs = self._decoder.feed(data)
            if msgs:
                return msgs

    def close(self) -> None:
        self.channel.close()
