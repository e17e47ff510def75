import subprocess
import sys

import numpy as np
import pytest

from sirendet.external import (
    BackendTimeout,
    ExternalBackend,
    PeerExit,
    ProtocolViolation,
)


def peer_cmd(kind: str, value: float | None = None) -> str:
    cmd = f"{sys.executable} -m sirendet.peers {kind}"
    if value is not None:
        cmd += f" {value}"
    return cmd


def test_const_peer_round_trip():
    backend = ExternalBackend.spawn(peer_cmd("const", 0.5))
    try:
        for _ in range(3):
            assert backend.infer(np.zeros(1000)) == 0.5
    finally:
        backend.close()


def test_rms_peer_matches_oracle():
    backend = ExternalBackend.spawn(peer_cmd("rms"))
    try:
        frame = np.full(8000, 0.25)
        assert backend.infer(frame) == pytest.approx(0.25, abs=1e-6)
        rng = np.random.default_rng(0)
        frame = rng.uniform(-0.5, 0.5, size=9919)
        expected = min(1.0, float(np.sqrt(np.mean(frame.astype(np.float32) ** 2))))
        assert backend.infer(frame) == pytest.approx(expected, abs=1e-6)
    finally:
        backend.close()


def test_large_frame_round_trip():
    # 64000-sample frames exceed the pipe buffer; exercises chunked writes.
    backend = ExternalBackend.spawn(peer_cmd("rms"))
    try:
        frame = np.full(64000, 0.1)
        assert backend.infer(frame) == pytest.approx(0.1, abs=1e-6)
    finally:
        backend.close()


def test_peer_exit_mid_request():
    backend = ExternalBackend.spawn(peer_cmd("flaky", 1))
    try:
        assert backend.infer(np.zeros(100)) == 1.0
        with pytest.raises(PeerExit):
            backend.infer(np.zeros(100))
    finally:
        backend.close()


def test_protocol_violation_bad_magic():
    backend = ExternalBackend.spawn(peer_cmd("badmagic"))
    try:
        with pytest.raises(ProtocolViolation, match="magic"):
            backend.infer(np.zeros(100))
    finally:
        backend.close()


def test_timeout_on_unresponsive_peer():
    backend = ExternalBackend.spawn("sleep 30", timeout_s=0.3)
    try:
        with pytest.raises(BackendTimeout):
            backend.infer(np.zeros(100))
    finally:
        backend.close()


def test_tcp_transport():
    proc = subprocess.Popen(
        [sys.executable, "-m", "sirendet.peers", "rms", "--tcp", "0"],
        stdout=subprocess.PIPE,
        text=True,
    )
    try:
        port = int(proc.stdout.readline().strip())
        backend = ExternalBackend.connect("127.0.0.1", port)
        try:
            frame = np.full(5000, 0.5)
            assert backend.infer(frame) == pytest.approx(0.5, abs=1e-6)
        finally:
            backend.close()
    finally:
        proc.terminate()
        proc.wait(timeout=5)


def test_min_input_enforced_locally():
    from sirendet.backends import FrameTooShort

    backend = ExternalBackend.spawn(peer_cmd("const", 0.5), min_input_samples=100)
    try:
        with pytest.raises(FrameTooShort):
            backend.infer(np.zeros(99))
    finally:
        backend.close()
