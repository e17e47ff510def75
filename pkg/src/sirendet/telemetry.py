"""WebSocket telemetry: live status broadcast plus operator control.

The engine's threads hand status records to a hub, which fans them out on
the service's asyncio loop; each client gets a bounded send queue and is
dropped when it falls behind, so the real-time path never blocks on a slow
peer. (The underlying library applies write flow control, so a stalled TCP
peer back-pressures its pump task and the queue overflow is what cuts the
client loose.) Control messages (set_config) are validated immediately,
acked, and applied by the engine at the next frame boundary.

Plain HTTP requests on the same port serve the operator dashboard's static
files when a directory is configured.

Wire schema (JSON text frames, seq strictly increasing per connection):
    -> {"type":"frame","seq":N,"t":s,"prob":p,"smoothed":q,
        "frame_ms":d,"infer_ms":m,"state":"IDLE|PENDING|ACTIVE"}
    -> {"type":"detection","seq":N,"event":"open|close","onset":s,
        "offset":s_or_null,"peak":p}
    -> {"type":"stats","seq":N,"cpu_pct":c,"mem_pct":m,"rt_factor":r,"fps":f}
    -> {"type":"config","seq":N,"config":{...}}
    <- {"type":"set_config", <field>: <value>, ...}
       reply {"type":"ack","ok":bool,"reason":str|null}
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging
import mimetypes
import socket as socket_module
import threading
import urllib.parse
from http import HTTPStatus
from pathlib import Path

from websockets.asyncio.server import serve as ws_serve
from websockets.datastructures import Headers
from websockets.exceptions import ConnectionClosed
from websockets.http11 import Response

from .config import validate_control_changes

log = logging.getLogger(__name__)

STATS_PERIOD_S = 0.1
DEFAULT_CLIENT_QUEUE = 256
# Bounds kernel-side buffering per client so a stalled peer back-pressures
# the pump task (and hence fills its queue) instead of hiding megabytes of
# undelivered telemetry in socket buffers.
CLIENT_SNDBUF_BYTES = 65536


class _Client:
    __slots__ = ("queue", "connection", "dead")

    def __init__(self, connection, max_queue: int):
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=max_queue)
        self.connection = connection
        self.dead = False


class TelemetryHub:
    """Bridge between engine threads and the asyncio fan-out loop.

    ``engine`` must provide ``cfg``, ``snapshot()`` and
    ``request_config_change(changes)``; the hub wires itself into the
    engine's status callbacks.
    """

    def __init__(self, engine, max_queue: int = DEFAULT_CLIENT_QUEUE):
        self.engine = engine
        self.max_queue = max_queue
        self._loop: asyncio.AbstractEventLoop | None = None
        self._clients: set[_Client] = set()
        self._seq = 0
        engine.on_frame = self.publish_frame
        engine.on_detection = self.publish_detection
        engine.on_config = self.publish_config

    # ----------------------------------------------- engine-thread entry points

    def publish_frame(self, frame, phase: str) -> None:
        self._submit({
            "type": "frame",
            "t": frame.end_s,
            "prob": frame.probability,
            "smoothed": frame.smoothed_probability,
            "frame_ms": frame.duration_ms,
            "infer_ms": frame.processing_ms,
            "state": phase,
        })

    def publish_detection(self, kind: str, event) -> None:
        self._submit({
            "type": "detection",
            "event": kind,
            "onset": event.onset_s,
            "offset": event.offset_s if kind == "close" else None,
            "peak": event.peak_probability,
        })

    def publish_config(self, cfg) -> None:
        self._submit({"type": "config", "config": cfg.to_dict()})

    def _submit(self, payload: dict) -> None:
        loop = self._loop
        if loop is None or loop.is_closed():
            return
        try:
            loop.call_soon_threadsafe(self._dispatch, payload)
        except RuntimeError:
            pass  # loop shut down mid-call

    # --------------------------------------------------------- asyncio side

    def attach(self, loop: asyncio.AbstractEventLoop) -> None:
        self._loop = loop

    def register(self, connection) -> _Client:
        client = _Client(connection, self.max_queue)
        self._dispatch_to(client, {"type": "config", "config": self.engine.cfg.to_dict()})
        self._clients.add(client)
        return client

    def unregister(self, client: _Client) -> None:
        self._clients.discard(client)

    def handle_control(self, text: str) -> dict:
        """Validate one inbound control message; returns the ack payload."""
        try:
            msg = json.loads(text)
        except json.JSONDecodeError as exc:
            return {"type": "ack", "ok": False, "reason": f"bad JSON: {exc}"}
        if not isinstance(msg, dict) or msg.get("type") != "set_config":
            return {"type": "ack", "ok": False, "reason": "unknown message type"}
        changes = {k: v for k, v in msg.items() if k != "type"}
        try:
            validate_control_changes(changes)
            self.engine.cfg.replace(**changes)  # trial application
            self.engine.request_config_change(changes)
        except ValueError as exc:
            return {"type": "ack", "ok": False, "reason": str(exc)}
        return {"type": "ack", "ok": True, "reason": None}

    async def stats_loop(self) -> None:
        while True:
            await asyncio.sleep(STATS_PERIOD_S)
            status = self.engine.snapshot()
            self._dispatch({
                "type": "stats",
                "cpu_pct": status.cpu_pct,
                "mem_pct": status.mem_pct,
                "rt_factor": status.rt_factor,
                "fps": status.fps,
            })

    def _dispatch(self, payload: dict) -> None:
        for client in list(self._clients):
            self._dispatch_to(client, dict(payload))

    def _dispatch_to(self, client: _Client, payload: dict) -> None:
        self._seq += 1
        payload["seq"] = self._seq
        try:
            client.queue.put_nowait(payload)
        except asyncio.QueueFull:
            # Falling behind by a full queue means the client is stalled;
            # cut it loose rather than let backpressure reach the engine.
            client.dead = True
            self.unregister(client)
            if self._loop is not None and not self._loop.is_closed():
                self._loop.create_task(self._drop(client))

    async def _drop(self, client: _Client) -> None:
        with contextlib.suppress(Exception):
            await client.connection.close(code=1008, reason="send queue overflow")


class TelemetryServer:
    """Threaded WebSocket service exposing a hub at ws://host:port/ws.

    Runs its own asyncio loop so the engine's threads stay untouched. Plain
    HTTP GETs are answered from ``static_dir`` when given (the dashboard).
    """

    def __init__(
        self,
        hub: TelemetryHub,
        host: str = "127.0.0.1",
        port: int = 0,
        static_dir: str | Path | None = None,
    ):
        self.hub = hub
        self.host = host
        self.requested_port = port
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        self._loop: asyncio.AbstractEventLoop | None = None
        self._server = None
        self._stats_task = None
        self._thread: threading.Thread | None = None
        self._started = threading.Event()
        self._startup_error: BaseException | None = None

    # ------------------------------------------------------------- lifecycle

    def start(self, ready_timeout_s: float = 10.0) -> None:
        self._thread = threading.Thread(
            target=self._run_loop, name="sirendet-telemetry", daemon=True
        )
        self._thread.start()
        if not self._started.wait(timeout=ready_timeout_s):
            raise RuntimeError("telemetry server failed to start in time")
        if self._startup_error is not None:
            raise RuntimeError(f"telemetry bind failed: {self._startup_error}")

    def stop(self) -> None:
        loop = self._loop
        if loop is None or loop.is_closed():
            return
        loop.call_soon_threadsafe(self._begin_shutdown)
        if self._thread is not None:
            self._thread.join(timeout=10.0)

    @property
    def port(self) -> int:
        return self._bound_port

    @property
    def ws_url(self) -> str:
        return f"ws://{self.host}:{self.port}/ws"

    @property
    def http_url(self) -> str:
        return f"http://{self.host}:{self.port}/"

    def _run_loop(self) -> None:
        loop = asyncio.new_event_loop()
        asyncio.set_event_loop(loop)
        self._loop = loop
        try:
            loop.run_until_complete(self._startup())
        except BaseException as exc:
            self._startup_error = exc
            self._started.set()
            loop.close()
            return
        self._started.set()
        try:
            loop.run_forever()
        finally:
            loop.close()

    async def _startup(self) -> None:
        self._server = await ws_serve(
            self._handler,
            self.host,
            self.requested_port,
            process_request=self._process_request,
            close_timeout=1.0,
        )
        self._bound_port = self._server.sockets[0].getsockname()[1]
        self.hub.attach(asyncio.get_running_loop())
        self._stats_task = asyncio.get_running_loop().create_task(self.hub.stats_loop())

    def _begin_shutdown(self) -> None:
        async def shutdown():
            if self._stats_task is not None:
                self._stats_task.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await self._stats_task
            self._server.close()
            with contextlib.suppress(Exception):
                await asyncio.wait_for(self._server.wait_closed(), timeout=5.0)
            pending = [
                t for t in asyncio.all_tasks() if t is not asyncio.current_task()
            ]
            for task in pending:
                task.cancel()
            await asyncio.gather(*pending, return_exceptions=True)
            self._loop.stop()

        self._loop.create_task(shutdown())

    # ------------------------------------------------------------ connection

    async def _handler(self, connection) -> None:
        sock = connection.transport.get_extra_info("socket")
        if sock is not None:
            sock.setsockopt(
                socket_module.SOL_SOCKET, socket_module.SO_SNDBUF, CLIENT_SNDBUF_BYTES
            )
        client = self.hub.register(connection)

        async def pump():
            while True:
                payload = await client.queue.get()
                await connection.send(json.dumps(payload))

        sender = asyncio.get_running_loop().create_task(pump())
        try:
            async for message in connection:
                reply = self.hub.handle_control(message)
                try:
                    client.queue.put_nowait(reply)
                except asyncio.QueueFull:
                    break
        except ConnectionClosed:
            pass
        except Exception as exc:  # per-client errors close only this client
            log.debug("client error: %s", exc)
        finally:
            self.hub.unregister(client)
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError, ConnectionClosed):
                await sender

    def _process_request(self, connection, request):
        """Answer plain HTTP from the static directory; None continues to WS."""
        path = urllib.parse.unquote(request.path.split("?", 1)[0])
        if path == "/ws":
            return None
        if self.static_dir is None:
            return _plain_response(HTTPStatus.NOT_FOUND, b"not found\n")
        if path.endswith("/"):
            path += "index.html"
        target = (self.static_dir / path.lstrip("/")).resolve()
        if not target.is_relative_to(self.static_dir) or not target.is_file():
            return _plain_response(HTTPStatus.NOT_FOUND, b"not found\n")
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        return _plain_response(HTTPStatus.OK, target.read_bytes(), ctype)


def _plain_response(status: HTTPStatus, body: bytes, ctype: str = "text/plain") -> Response:
    headers = Headers(
        [("Content-Type", ctype), ("Content-Length", str(len(body)))]
    )
    return Response(status.value, status.phrase, headers, body)


def serve(engine, bind: str, static_dir: str | Path | None = None) -> TelemetryServer:
    """Start a telemetry service for a (running or startable) engine.

    ``bind`` is "host:port"; port 0 picks an ephemeral port, readable from
    the returned handle.
    """
    host, _, port_str = bind.rpartition(":")
    if not host:
        host, port_str = bind, "0"
    server = TelemetryServer(
        TelemetryHub(engine), host=host, port=int(port_str), static_dir=static_dir
    )
    server.start()
    return server
