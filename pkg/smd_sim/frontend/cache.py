from smd_sim.exceptions import ConfigError


class LlcModel:
    """A set-associative last level cache with LRU replacement and write-back.

    Works on line numbers (physical address // line size). Each set is a dict
    from line to dirty bit kept in recency order, oldest first.
    """

    def __init__(self, size_bytes, ways=8, line_size=64):
        if size_bytes % (ways * line_size):
            raise ConfigError(
                f"A {size_bytes} byte cache cannot be split into {ways} ways of {line_size} byte lines"
            )
        self.ways = ways
        self.line_size = line_size
        self.num_sets = size_bytes // (ways * line_size)
        if self.num_sets < 1:
            raise ConfigError("The cache needs at least one set")
        self.sets = {}
        self.hits = 0
        self.misses = 0
        self.writebacks = 0

    @property
    def accesses(self):
        return self.hits + self.misses

    def contains(self, line):
        lines = self.sets.get(line % self.num_sets)
        return lines is not None and line in lines

    def access(self, line, write=False):
        """Touch ``line``, returning whether it hit and the dirty line evicted, if any."""
        index = line % self.num_sets
        lines = self.sets.get(index)
        if lines is None:
            lines = self.sets[index] = {}
        if line in lines:
            dirty = lines.pop(line)
            lines[line] = dirty or write
            self.hits += 1
            return True, None
        self.misses += 1
        victim = None
        if len(lines) >= self.ways:
            oldest = next(iter(lines))
            if lines.pop(oldest):
                victim = oldest
                self.writebacks += 1
        lines[line] = write
        return False, victim
