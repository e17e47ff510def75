"""Adapter running inference over a byte protocol to an external peer.

This is how a real neural model plugs in from its own ecosystem: the engine
speaks a tiny length-prefixed binary protocol (text would cost too much at
64000-sample frames) to a child process over stdio or to a TCP peer.

Wire format (little-endian):
    request : b"EVSD" + u32 sample_count + sample_count * f32 samples
    response: b"EVSP" + f32 probability
One request is outstanding at a time.
"""

from __future__ import annotations

import math
import os
import selectors
import shlex
import socket
import struct
import subprocess
import time

import numpy as np

from .backends import DetectorBackend

REQUEST_MAGIC = b"EVSD"
RESPONSE_MAGIC = b"EVSP"
DEFAULT_TIMEOUT_S = 5.0


class BackendTimeout(Exception):
    """Peer did not answer within the per-call timeout."""


class ProtocolViolation(Exception):
    """Peer sent bytes that do not follow the wire format."""


class PeerExit(Exception):
    """Peer process or connection went away."""


class _StdioTransport:
    """Child process reached through its stdin/stdout pipes."""

    def __init__(self, command: str):
        self.command = command
        self._proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
        )
        os.set_blocking(self._proc.stdin.fileno(), False)
        os.set_blocking(self._proc.stdout.fileno(), False)

    def send(self, data: bytes, deadline: float) -> None:
        fd = self._proc.stdin.fileno()
        sel = selectors.DefaultSelector()
        sel.register(fd, selectors.EVENT_WRITE)
        view = memoryview(data)
        try:
            while view:
                if not sel.select(timeout=_remaining(deadline)):
                    raise BackendTimeout(f"write to {self.command!r} timed out")
                try:
                    written = os.write(fd, view)
                except BrokenPipeError as exc:
                    raise PeerExit(f"peer {self.command!r} closed stdin: {exc}") from None
                except BlockingIOError:
                    continue
                view = view[written:]
        finally:
            sel.close()

    def recv_exact(self, n: int, deadline: float) -> bytes:
        fd = self._proc.stdout.fileno()
        sel = selectors.DefaultSelector()
        sel.register(fd, selectors.EVENT_READ)
        chunks = []
        got = 0
        try:
            while got < n:
                if not sel.select(timeout=_remaining(deadline)):
                    raise BackendTimeout(f"read from {self.command!r} timed out")
                try:
                    chunk = os.read(fd, n - got)
                except BlockingIOError:
                    continue
                if not chunk:
                    raise PeerExit(f"peer {self.command!r} exited mid-response")
                chunks.append(chunk)
                got += len(chunk)
        finally:
            sel.close()
        return b"".join(chunks)

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        for pipe in (self._proc.stdin, self._proc.stdout):
            try:
                pipe.close()
            except OSError:
                pass


class _TcpTransport:
    """TCP connection to a configured host:port."""

    def __init__(self, host: str, port: int, connect_timeout: float = DEFAULT_TIMEOUT_S):
        self.address = f"{host}:{port}"
        self._sock = socket.create_connection((host, port), timeout=connect_timeout)

    def send(self, data: bytes, deadline: float) -> None:
        self._sock.settimeout(_remaining(deadline))
        try:
            self._sock.sendall(data)
        except socket.timeout:
            raise BackendTimeout(f"write to {self.address} timed out") from None
        except OSError as exc:
            raise PeerExit(f"peer {self.address} connection lost: {exc}") from None

    def recv_exact(self, n: int, deadline: float) -> bytes:
        chunks = []
        got = 0
        while got < n:
            self._sock.settimeout(_remaining(deadline))
            try:
                chunk = self._sock.recv(n - got)
            except socket.timeout:
                raise BackendTimeout(f"read from {self.address} timed out") from None
            except OSError as exc:
                raise PeerExit(f"peer {self.address} connection lost: {exc}") from None
            if not chunk:
                raise PeerExit(f"peer {self.address} closed the connection mid-response")
            chunks.append(chunk)
            got += len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def _remaining(deadline: float) -> float:
    left = deadline - time.monotonic()
    if left <= 0:
        raise BackendTimeout("per-call timeout exhausted")
    return left


class ExternalBackend(DetectorBackend):
    """DetectorBackend speaking the wire protocol to an out-of-process model."""

    def __init__(
        self,
        transport,
        name: str = "external",
        min_input_samples: int = 1,
        sample_rate: int = 32000,
        timeout_s: float = DEFAULT_TIMEOUT_S,
    ):
        self._transport = transport
        self.name = name
        self.min_input_samples = min_input_samples
        self.declared_sample_rate = sample_rate
        self.timeout_s = timeout_s

    @classmethod
    def spawn(cls, command: str, **kwargs) -> "ExternalBackend":
        """Start ``command`` as a child process and adapt its stdio."""
        return cls(_StdioTransport(command), name=f"exec:{command}", **kwargs)

    @classmethod
    def connect(cls, host: str, port: int, **kwargs) -> "ExternalBackend":
        return cls(_TcpTransport(host, port), name=f"tcp:{host}:{port}", **kwargs)

    def infer(self, frame) -> float:
        self._check_length(frame)
        payload = np.asarray(frame, dtype="<f4").tobytes()
        request = REQUEST_MAGIC + struct.pack("<I", len(frame)) + payload
        deadline = time.monotonic() + self.timeout_s
        self._transport.send(request, deadline)
        response = self._transport.recv_exact(8, deadline)
        if response[:4] != RESPONSE_MAGIC:
            raise ProtocolViolation(
                f"{self.name}: bad response magic {response[:4]!r}"
            )
        (prob,) = struct.unpack("<f", response[4:])
        if not math.isfinite(prob) or not 0.0 <= prob <= 1.0:
            raise ProtocolViolation(f"{self.name}: probability out of range: {prob}")
        return float(prob)

    def close(self) -> None:
        self._transport.close()
