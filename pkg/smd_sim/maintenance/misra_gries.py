class CounterTable:
    """A Misra-Gries frequent item table with a spillover counter.

    Tracks up to ``size`` rows. ``spillover`` never exceeds the smallest
    counter and every tracked count is an upper bound on the row's true count
    since the last reset. Rows sharing a count live in one bucket so finding
    and evicting a minimum entry is constant time. Ties are broken in favour of
    evicting the entry that reached the minimum first.
    """

    def __init__(self, size):
        if size < 1:
            raise ValueError(f"A counter table needs at least one entry, got {size}")
        self.size = size
        self.reset()

    def reset(self):
        self.spillover = 0
        self._counts = {}
        self._buckets = {}
        self._min = None

    def __len__(self):
        return len(self._counts)

    def __contains__(self, row):
        return row in self._counts

    def count(self, row):
        return self._counts.get(row)

    def entries(self):
        return dict(self._counts)

    @property
    def min_count(self):
        """The smallest counter, with empty entries counting as zero."""
        if len(self._counts) < self.size:
            return 0
        return self._min

    def record(self, row):
        """Count one activation of ``row``.

        Returns the row's new counter, or ``None`` if the row is not tracked.
        """
        count = self._counts.get(row)
        if count is not None:
            self._move(row, count, count + 1)
            return count + 1
        if self.spillover != self.min_count:
            self.spillover += 1
            return None
        if len(self._counts) == self.size:
            self._evict_min()
        self._counts[row] = self.spillover + 1
        self._buckets.setdefault(self.spillover + 1, {})[row] = None
        if self._min is None or self.spillover + 1 < self._min:
            self._min = self.spillover + 1
        return self.spillover + 1

    def _move(self, row, old, new):
        bucket = self._buckets[old]
        del bucket[row]
        self._counts[row] = new
        self._buckets.setdefault(new, {})[row] = None
        if not bucket:
            del self._buckets[old]
            if old == self._min:
                self._min = new

    def _evict_min(self):
        # Only called when spillover equals the minimum, so the replacement row
        # lands at minimum + 1 and becomes the minimum if the bucket empties
        bucket = self._buckets[self._min]
        victim = next(iter(bucket))
        del bucket[victim]
        del self._counts[victim]
        if not bucket:
            del self._buckets[self._min]
            self._min += 1
