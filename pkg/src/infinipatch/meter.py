"""Live-tensor byte accounting for the constant-memory checks."""

import threading


class MemoryMeter:
    """Counts bytes of feature tensors a job holds alive.

    Forward passes call :meth:`hold` when they create a feature map and
    :meth:`drop` when they are done with one.  Thread-safe, so one meter can
    observe several workers at once.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.current = 0
        self.peak = 0

    def hold(self, arr):
        with self._lock:
            self.current += arr.nbytes
            if self.current > self.peak:
                self.peak = self.current
        return arr

    def drop(self, *arrays):
        with self._lock:
            for arr in arrays:
                self.current -= arr.nbytes

    def reset_peak(self):
        with self._lock:
            self.peak = self.current


class _NullMeter:
    def hold(self, arr):
        return arr

    def drop(self, *arrays):
        pass


NULL_METER = _NullMeter()
