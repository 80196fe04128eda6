"""Wall-clock timers accumulated per kernel tag.

Scopes nest; time is charged exclusively, so a ratio evaluated inside the
NLPP scope counts toward J1/J2/Bspline-v and not toward NLPP as well. One
instance per worker thread.
"""

import time
from contextlib import nullcontext

TAGS = ("DistTable", "J1", "J2", "Bspline-v", "Bspline-vgh", "SPO-vgl", "DetUpdate", "NLPP", "Other")


class _Scope:
    __slots__ = ("timers", "tag", "t0", "child")

    def __init__(self, timers, tag):
        self.timers = timers
        self.tag = tag

    def __enter__(self):
        self.child = 0.0
        self.timers._stack.append(self)
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        elapsed = time.perf_counter() - self.t0
        stack = self.timers._stack
        stack.pop()
        if stack:
            stack[-1].child += elapsed
        self.timers.seconds[self.tag] = self.timers.seconds.get(self.tag, 0.0) + elapsed - self.child
        return False


class KernelTimers:
    def __init__(self, enabled=True):
        self.enabled = enabled
        self.seconds = {tag: 0.0 for tag in TAGS}
        self._stack = []

    def scope(self, tag):
        if not self.enabled:
            return nullcontext()
        return _Scope(self, tag)

    def add(self, tag, seconds):
        self.seconds[tag] = self.seconds.get(tag, 0.0) + seconds

    def merge(self, other):
        for tag, s in other.seconds.items():
            self.add(tag, s)
        return self

    def total(self):
        return sum(self.seconds.values())

    def normalized(self, wall):
        if wall <= 0:
            return {tag: 0.0 for tag in self.seconds}
        return {tag: s / wall for tag, s in self.seconds.items()}


NULL_TIMERS = KernelTimers(enabled=False)
