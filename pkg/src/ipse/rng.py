"""SplitMix64 streams used by every stochastic part of the simulator.

Both kernels implement the same generator so that the compiled and the
pure-Python paths consume identical random numbers. Substreams are derived
with :func:`derive`; the rule is

    derive(seed, i) = mix64(seed + (i + 1) * GOLDEN)   (mod 2**64)

and is used for per-action rollout streams, per-game evaluation streams and
per-replication experiment streams.
"""

import zlib

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive(seed, index):
    return mix64((seed + (index + 1) * GOLDEN) & MASK64)


def stable_id(name):
    """32-bit identifier of a string that does not depend on PYTHONHASHSEED."""
    return zlib.crc32(name.encode("utf-8"))


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed=0):
        self.state = seed & MASK64

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def below(self, n):
        """Integer in ``[0, n)``; modulo reduction, bias below n / 2**64."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def random(self):
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def spawn(self, index):
        """Independent child stream keyed by ``index``; does not advance self."""
        return SplitMix64(derive(self.state, index))

    def numpy(self):
        """A numpy Generator seeded from this stream (advances it once)."""
        import numpy as np

        return np.random.default_rng(self.next_u64())

    def __repr__(self):
        return f"SplitMix64(state={self.state:#018x})"
