"""Seeded 64-bit PRNG (SplitMix64) behind the ``random.Random`` interface.

Only ``random`` and ``getrandbits`` are overridden, so ``randint``, ``choice``,
``sample`` and friends come from the standard library but draw from this state.
"""
import random

MASK = (1 << 64) - 1


class SplitMix64(random.Random):
    def __init__(self, seed=0):
        self.state = seed & MASK
        super().__init__(seed)

    def seed(self, a=None, version=2):
        # random.Random.__init__ calls seed(); keep our own state instead
        if isinstance(a, int):
            self.state = a & MASK
        self.gauss_next = None

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def random(self):
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def getrandbits(self, k):
        if k <= 0:
            return 0
        out, have = 0, 0
        while have < k:
            out = (out << 64) | self.next_u64()
            have += 64
        return out >> (have - k)

    def getstate(self):
        return self.state

    def setstate(self, state):
        self.state = state

    def fork(self, tag):
        """Independent stream for a sub-suite, derived from the current state and a tag."""
        return SplitMix64((self.state ^ (tag * 0xD1B54A32D192ED03)) & MASK)


def rng(seed):
    return SplitMix64(seed)
