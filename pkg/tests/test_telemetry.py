import json
import threading
import time

import pytest
from websockets.sync.client import connect as ws_connect

from sirendet.audio import silence
from sirendet.backends import ScriptedBackend
from sirendet.config import EngineConfig
from sirendet.engine import ClipSource, EngineStatus, RealTimeEngine, RunMode
from sirendet.telemetry import TelemetryHub, TelemetryServer


class StubEngine:
    """Minimal engine stand-in: config, status snapshot, control intake."""

    def __init__(self):
        self.cfg = EngineConfig()
        self.requested = []
        self.on_frame = None
        self.on_detection = None
        self.on_config = None

    def snapshot(self):
        return EngineStatus(
            running=True, phase="IDLE", frames_done=1, last_probability=0.3,
            last_smoothed=0.3, last_frame_ms=310.0, last_infer_ms=12.0,
            rt_factor=25.0, fps=3.2, cpu_pct=10.0, mem_pct=5.0, dropped_samples=0,
        )

    def request_config_change(self, changes):
        from sirendet.config import validate_control_changes

        validate_control_changes(changes)
        self.requested.append(changes)
        self.cfg = self.cfg.replace(**changes)
        if self.on_config:
            self.on_config(self.cfg)


@pytest.fixture
def stub_server():
    engine = StubEngine()
    hub = TelemetryHub(engine)
    server = TelemetryServer(hub, port=0)
    server.start()
    yield engine, hub, server
    server.stop()


def recv_json(sock, timeout=5.0):
    return json.loads(sock.recv(timeout=timeout))


def recv_until(sock, predicate, timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        msg = recv_json(sock, timeout=max(0.05, deadline - time.monotonic()))
        if predicate(msg):
            return msg
    raise AssertionError("expected message not received")


def test_join_receives_config_snapshot_first(stub_server):
    engine, hub, server = stub_server
    with ws_connect(server.ws_url) as sock:
        first = recv_json(sock)
        assert first["type"] == "config"
        assert first["config"] == engine.cfg.to_dict()
        assert first["seq"] >= 1


def test_stats_broadcast_cadence(stub_server):
    _, _, server = stub_server
    with ws_connect(server.ws_url) as sock:
        recv_json(sock)  # config
        arrivals = []
        while len(arrivals) < 6:
            msg = recv_json(sock)
            if msg["type"] == "stats":
                arrivals.append(time.monotonic())
                assert msg["cpu_pct"] == 10.0
                assert msg["rt_factor"] == 25.0
        spacings = [b - a for a, b in zip(arrivals, arrivals[1:])]
        assert all(s <= 0.5 for s in spacings)  # nominal 100 ms, generous bound


def test_two_clients_receive_identical_frames(stub_server):
    engine, hub, server = stub_server
    from conftest import make_log

    frame = make_log([0.8]).frames[0]
    with ws_connect(server.ws_url) as a, ws_connect(server.ws_url) as b:
        recv_json(a)
        recv_json(b)
        for _ in range(3):
            hub.publish_frame(frame, "PENDING")
        got_a = [recv_until(a, lambda m: m["type"] == "frame") for _ in range(3)]
        got_b = [recv_until(b, lambda m: m["type"] == "frame") for _ in range(3)]
        strip = lambda m: {k: v for k, v in m.items() if k != "seq"}
        assert [strip(m) for m in got_a] == [strip(m) for m in got_b]
        assert got_a[0]["prob"] == 0.8
        assert got_a[0]["state"] == "PENDING"
        # seq strictly increasing per connection
        for got in (got_a, got_b):
            seqs = [m["seq"] for m in got]
            assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


def test_set_config_round_trip(stub_server):
    engine, hub, server = stub_server
    with ws_connect(server.ws_url) as sock:
        recv_json(sock)
        sock.send(json.dumps({"type": "set_config", "threshold": 0.7}))
        ack = recv_until(sock, lambda m: m["type"] == "ack")
        assert ack["ok"] is True
        assert engine.requested == [{"threshold": 0.7}]
        conf = recv_until(sock, lambda m: m["type"] == "config")
        assert conf["config"]["threshold"] == 0.7


def test_invalid_threshold_rejected(stub_server):
    engine, _, server = stub_server
    with ws_connect(server.ws_url) as sock:
        recv_json(sock)
        sock.send(json.dumps({"type": "set_config", "threshold": 1.5}))
        ack = recv_until(sock, lambda m: m["type"] == "ack")
        assert ack["ok"] is False
        assert "threshold out of (0,1)" in ack["reason"]
        assert engine.requested == []


def test_unknown_fields_rejected_not_ignored(stub_server):
    engine, _, server = stub_server
    with ws_connect(server.ws_url) as sock:
        recv_json(sock)
        sock.send(json.dumps({"type": "set_config", "threshold": 0.6, "bogus": 1}))
        ack = recv_until(sock, lambda m: m["type"] == "ack")
        assert ack["ok"] is False
        assert "bogus" in ack["reason"]
        assert engine.requested == []


def test_unknown_message_type_gets_nack(stub_server):
    _, _, server = stub_server
    with ws_connect(server.ws_url) as sock:
        recv_json(sock)
        sock.send(json.dumps({"type": "subscribe"}))
        ack = recv_until(sock, lambda m: m["type"] == "ack")
        assert ack["ok"] is False


def test_detection_messages(stub_server):
    _, hub, server = stub_server
    from sirendet.types import DetectionEvent

    ev = DetectionEvent(1.0, 2.0, 0.95, 4)
    with ws_connect(server.ws_url) as sock:
        recv_json(sock)
        hub.publish_detection("open", ev)
        hub.publish_detection("close", ev)
        opened = recv_until(sock, lambda m: m["type"] == "detection")
        closed = recv_until(sock, lambda m: m["type"] == "detection")
        assert opened["event"] == "open" and opened["offset"] is None
        assert closed["event"] == "close" and closed["offset"] == 2.0
        assert closed["peak"] == 0.95


def stalled_ws_socket(port: int):
    """Complete a WebSocket handshake, then never read: TCP-level stall.

    A tiny receive buffer keeps the peer's flow-control window small so the
    server's sends back up quickly.
    """
    import base64
    import os
    import socket

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 4096)
    sock.connect(("127.0.0.1", port))
    key = base64.b64encode(os.urandom(16)).decode()
    request = (
        f"GET /ws HTTP/1.1\r\nHost: 127.0.0.1:{port}\r\n"
        "Upgrade: websocket\r\nConnection: Upgrade\r\n"
        f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
    )
    sock.sendall(request.encode())
    buf = b""
    while b"\r\n\r\n" not in buf:
        buf += sock.recv(64)
    return sock


def test_slow_client_dropped_without_blocking_publisher(stub_server):
    engine, hub, server = stub_server
    from conftest import make_log

    frame = make_log([0.8]).frames[0]
    total = 4000
    batch = 100
    stalled = stalled_ws_socket(server.port)  # handshaken, never reads
    try:
        with ws_connect(server.ws_url) as live:
            recv_json(live)
            seen = 0
            publish_time = 0.0
            # Lockstep batches: the live client drains what it is sent, while
            # the stalled one accumulates until its bounded queue overflows.
            for _ in range(total // batch):
                t0 = time.perf_counter()
                for _ in range(batch):
                    hub.publish_frame(frame, "IDLE")
                publish_time += time.perf_counter() - t0
                while True:
                    if recv_json(live, timeout=10)["type"] == "frame":
                        seen += 1
                        if seen % batch == 0:
                            break
            assert seen == total  # healthy client missed nothing
            assert publish_time < 5.0  # publisher never blocked on the stalled peer

        deadline = time.monotonic() + 10
        while time.monotonic() < deadline and hub._clients:
            time.sleep(0.05)
        assert len(hub._clients) == 0, "stalled client was not dropped"
    finally:
        stalled.close()


def test_live_engine_with_stalled_client_keeps_cadence():
    """A stalled telemetry client must not perturb the consumer loop."""

    def run_session(attach_stalled: bool) -> int:
        clip = silence(0.5, 32000)
        engine = RealTimeEngine(EngineConfig(), ScriptedBackend.constant(0.3), 32000)
        hub = TelemetryHub(engine)
        server = TelemetryServer(hub, port=0)
        server.start()
        stalled = None
        try:
            if attach_stalled:
                stalled = ws_connect(server.ws_url)  # connects, never reads
            log = engine.run(
                ClipSource(clip, loop=True), RunMode.LIVE, duration_s=4.0, clip_id="live"
            )
            return len(log.frames)
        finally:
            if stalled is not None:
                stalled.close()
            server.stop()

    baseline = run_session(attach_stalled=False)
    with_stall = run_session(attach_stalled=True)
    assert with_stall >= 0.95 * baseline


def test_engine_telemetry_end_to_end():
    """Full stack: real engine run streamed to a protocol client."""
    clip = silence(0.5, 32000)
    backend = ScriptedBackend([(1.5, 0.9), (None, 0.1)])
    cfg = EngineConfig(consecutive_k=2, release_m=1, smoothing_window=1)
    engine = RealTimeEngine(cfg, backend, 32000)
    hub = TelemetryHub(engine)
    server = TelemetryServer(hub, port=0)
    server.start()
    try:
        result = {}

        def drive():
            result["log"] = engine.run(
                ClipSource(clip, loop=True), RunMode.LIVE, duration_s=3.0, clip_id="live"
            )

        runner = threading.Thread(target=drive)
        with ws_connect(server.ws_url) as sock:
            first = recv_json(sock)
            assert first["type"] == "config"
            runner.start()
            frame = recv_until(sock, lambda m: m["type"] == "frame", timeout=10)
            assert frame["prob"] == 0.9
            detection = recv_until(sock, lambda m: m["type"] == "detection", timeout=10)
            assert detection["event"] == "open"
            # Change the threshold mid-run; ack then config broadcast follow.
            sock.send(json.dumps({"type": "set_config", "threshold": 0.8}))
            ack = recv_until(sock, lambda m: m["type"] == "ack", timeout=10)
            assert ack["ok"] is True
            conf = recv_until(sock, lambda m: m["type"] == "config", timeout=10)
            assert conf["config"]["threshold"] == 0.8
        runner.join(timeout=15)
        assert not runner.is_alive()
        log = result["log"]
        assert log.config_changes and log.config_changes[0].changes == {"threshold": 0.8}
        assert log.detections, "scripted positive span should confirm an event"
    finally:
        server.stop()


def test_dashboard_static_files_served(tmp_path):
    """live --serve exposes the built dashboard over plain HTTP."""
    import urllib.request
    from pathlib import Path

    dist = Path(__file__).resolve().parents[1] / "frontend" / "dist"
    if not dist.is_dir():
        pytest.skip("dashboard not built (frontend/dist missing)")

    engine = StubEngine()
    hub = TelemetryHub(engine)
    server = TelemetryServer(hub, port=0, static_dir=dist)
    server.start()
    try:
        with urllib.request.urlopen(f"http://127.0.0.1:{server.port}/") as resp:
            body = resp.read().decode()
            assert "Siren Detection Console" in body
        with urllib.request.urlopen(
            f"http://127.0.0.1:{server.port}/dashboard.js"
        ) as resp:
            assert resp.headers["Content-Type"].startswith("text/javascript") or \
                resp.headers["Content-Type"].startswith("application/javascript")
            assert b"boot" in resp.read()
        with pytest.raises(urllib.error.HTTPError):
            urllib.request.urlopen(f"http://127.0.0.1:{server.port}/../secrets")
        # WebSocket endpoint still works alongside static serving.
        with ws_connect(server.ws_url) as sock:
            assert recv_json(sock)["type"] == "config"
    finally:
        server.stop()
