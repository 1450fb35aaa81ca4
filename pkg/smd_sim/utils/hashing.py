import mmh3
import numpy as np


class HashFamily:
    """``k`` independent indexes into a table of ``size`` slots.

    Uses double hashing over the two halves of a 128 bit murmur hash. Indexes are
    memoised per key since the same rows are hashed over and over.
    """

    def __init__(self, size, num_hashes, seed=0, memo_limit=1 << 16):
        if size < 1 or num_hashes < 1:
            raise ValueError("size and num_hashes must be positive")
        self.size = size
        self.num_hashes = num_hashes
        self.seed = seed & 0xFFFFFFFF
        self.memo_limit = memo_limit
        self._memo = {}

    def indexes(self, key):
        idx = self._memo.get(key)
        if idx is not None:
            return idx
        h1, h2 = mmh3.hash64(str(key), self.seed, signed=False)
        h2 |= 1
        idx = np.array(
            [(h1 + i * h2) % self.size for i in range(self.num_hashes)], dtype=np.intp
        )
        if len(self._memo) >= self.memo_limit:
            self._memo.clear()
        self._memo[key] = idx
        return idx
