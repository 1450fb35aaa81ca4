import math

import numpy as np

from smd_sim.utils.hashing import HashFamily


class BloomFilter:
    """A bit-array Bloom filter over integer keys. Never gives false negatives."""

    def __init__(self, size=8192, num_hashes=6, seed=0):
        self.hashes = HashFamily(size, num_hashes, seed=seed)
        self.bits = np.zeros(size, dtype=bool)
        self.count = 0

    def __len__(self):
        return self.count

    def __contains__(self, key):
        return self.test(key)

    def add(self, key):
        self.bits[self.hashes.indexes(key)] = True
        self.count += 1

    def test(self, key):
        return bool(self.bits[self.hashes.indexes(key)].all())

    def false_positive_rate(self, n=None):
        """Expected false positive rate after ``n`` insertions (default: so far)."""
        n = self.count if n is None else n
        m, k = len(self.bits), self.hashes.num_hashes
        return (1 - math.exp(-k * n / m)) ** k


class CountingBloomFilter:
    """A counting Bloom filter giving an over-estimate of each key's count."""

    def __init__(self, size=1024, num_hashes=4, seed=0):
        self.hashes = HashFamily(size, num_hashes, seed=seed)
        self.counters = np.zeros(size, dtype=np.uint32)

    def add(self, key, count=1):
        np.add.at(self.counters, self.hashes.indexes(key), count)

    def estimate(self, key):
        return int(self.counters[self.hashes.indexes(key)].min())

    def __contains__(self, key):
        return self.estimate(key) > 0

    def clear(self):
        self.counters[:] = 0
