"""Fixed-capacity circular sample buffer for one producer and one consumer.

Heads are absolute monotonic sample counters; storage indices are the heads
modulo capacity. Reads are destructive and consecutive, so returned frames
tile the written stream. If the producer laps the reader, the read head
jumps forward and the skipped samples are counted in ``dropped_samples``
instead of stalling the producer.
"""

from __future__ import annotations

import threading

import numpy as np


class BufferClosed(Exception):
    """Write attempted after close()."""


class _ClosedType:
    """Distinguished result returned to readers once the buffer is closed."""

    __slots__ = ()

    def __repr__(self):
        return "<ring buffer closed>"


CLOSED = _ClosedType()


class RingBuffer:
    """Single-producer/single-consumer circular buffer with blocking reads."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._storage = np.zeros(capacity, dtype=np.float64)
        self._write_head = 0
        self._read_head = 0
        self._dropped = 0
        self._closed = False
        self._cond = threading.Condition()

    @property
    def write_head(self) -> int:
        with self._cond:
            return self._write_head

    @property
    def read_head(self) -> int:
        with self._cond:
            return self._read_head

    @property
    def dropped_samples(self) -> int:
        with self._cond:
            return self._dropped

    @property
    def closed(self) -> bool:
        with self._cond:
            return self._closed

    def write(self, chunk) -> None:
        """Append samples, waking any blocked reader.

        Chunks longer than the capacity are rejected; the caller must split
        them. An empty chunk is a no-op and releases no availability signal.
        """
        chunk = np.asarray(chunk, dtype=np.float64)
        n = len(chunk)
        if n > self.capacity:
            raise ValueError(f"chunk of {n} samples exceeds capacity {self.capacity}; split it")
        if n == 0:
            return
        with self._cond:
            if self._closed:
                raise BufferClosed("write after close")
            pos = self._write_head % self.capacity
            first = min(n, self.capacity - pos)
            self._storage[pos : pos + first] = chunk[:first]
            if first < n:
                self._storage[: n - first] = chunk[first:]
            self._write_head += n
            self._cond.notify_all()

    def read_frame(self, n: int):
        """Return the next ``n`` samples in stream order, blocking if needed.

        Blocks until ``n`` samples are available. If the writer has
        overwritten unread data, the read head first jumps to the oldest
        surviving sample and the skipped count is added to
        ``dropped_samples``. Returns :data:`CLOSED` if the buffer is closed
        and the remaining data cannot satisfy the request.
        """
        if n > self.capacity:
            raise ValueError(f"frame of {n} samples exceeds capacity {self.capacity}")
        if n <= 0:
            raise ValueError(f"frame size must be positive, got {n}")
        with self._cond:
            while True:
                self._reconcile_overrun()
                if self._write_head - self._read_head >= n:
                    return self._take(n)
                if self._closed:
                    return CLOSED
                self._cond.wait()

    def available(self) -> int:
        """Unread sample count snapshot (may exceed capacity before a read
        repairs an overrun)."""
        with self._cond:
            return self._write_head - self._read_head

    def space(self) -> int:
        with self._cond:
            return self.capacity - min(self._write_head - self._read_head, self.capacity)

    def wait_for_space(self, n: int, timeout: float | None = None) -> bool:
        """Block until ``n`` samples fit without overwriting unread data.

        Used by paced-down producers (offline mode). Returns False on timeout
        or close.
        """
        with self._cond:
            ok = self._cond.wait_for(
                lambda: self._closed
                or self.capacity - (self._write_head - self._read_head) >= n,
                timeout=timeout,
            )
            return ok and not self._closed

    def close(self) -> None:
        """Wake all blocked readers permanently. Safe from any thread."""
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def _reconcile_overrun(self) -> None:
        backlog = self._write_head - self._read_head
        if backlog > self.capacity:
            skipped = backlog - self.capacity
            self._read_head += skipped
            self._dropped += skipped

    def _take(self, n: int) -> np.ndarray:
        pos = self._read_head % self.capacity
        first = min(n, self.capacity - pos)
        if first == n:
            out = self._storage[pos : pos + n].copy()
        else:
            out = np.concatenate([self._storage[pos:], self._storage[: n - first]])
        self._read_head += n
        self._cond.notify_all()
        return out
