"""Reference peers for the external backend protocol.

Run as ``python -m sirendet.peers <kind>`` to serve requests over stdio, or
with ``--tcp PORT`` to listen on TCP. Kinds:

* ``const <p>``  always answer probability p
* ``rms``        answer the frame's RMS clamped to [0, 1]
* ``flaky <n>``  answer n requests, then exit mid-request without replying
* ``badmagic``   answer with a wrong response magic (protocol-violation peer)
"""

from __future__ import annotations

import argparse
import socket
import struct
import sys

import numpy as np

REQUEST_MAGIC = b"EVSD"
RESPONSE_MAGIC = b"EVSP"


def _read_exact(read, n: int) -> bytes | None:
    chunks = []
    got = 0
    while got < n:
        chunk = read(n - got)
        if not chunk:
            return None
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def serve(read, write, kind: str, const_p: float, flaky_after: int) -> None:
    served = 0
    while True:
        magic = _read_exact(read, 4)
        if magic is None:
            return
        if magic != REQUEST_MAGIC:
            return
        header = _read_exact(read, 4)
        if header is None:
            return
        (count,) = struct.unpack("<I", header)
        payload = _read_exact(read, count * 4)
        if payload is None:
            return

        if kind == "flaky" and served >= flaky_after:
            return  # request consumed, no response: peer dies mid-exchange

        if kind == "const":
            prob = const_p
        elif kind == "rms":
            samples = np.frombuffer(payload, dtype="<f4")
            prob = float(min(1.0, np.sqrt(np.mean(samples.astype(np.float64) ** 2))))
        elif kind == "flaky":
            prob = const_p
        elif kind == "badmagic":
            write(b"XXXX" + struct.pack("<f", 0.5))
            served += 1
            continue
        else:
            raise ValueError(f"unknown peer kind {kind!r}")

        write(RESPONSE_MAGIC + struct.pack("<f", prob))
        served += 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Reference inference peers")
    parser.add_argument("kind", choices=["const", "rms", "flaky", "badmagic"])
    parser.add_argument("value", nargs="?", type=float, default=0.5,
                        help="probability for const, request budget for flaky")
    parser.add_argument("--tcp", type=int, metavar="PORT",
                        help="listen on 127.0.0.1:PORT instead of stdio")
    args = parser.parse_args(argv)

    flaky_after = int(args.value) if args.kind == "flaky" else 0
    const_p = args.value if args.kind in ("const", "flaky") else 0.5

    if args.tcp is not None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind(("127.0.0.1", args.tcp))
        listener.listen(1)
        # Report the bound port so callers can pass --tcp 0.
        print(listener.getsockname()[1], flush=True)
        conn, _ = listener.accept()
        with conn:
            file = conn.makefile("rwb")
            serve(file.read, lambda b: (file.write(b), file.flush()), args.kind,
                  const_p, flaky_after)
        listener.close()
        return 0

    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    serve(stdin.read, lambda b: (stdout.write(b), stdout.flush()), args.kind,
          const_p, flaky_after)
    return 0


if __name__ == "__main__":
    sys.exit(main())
