class NackLedger:
    """When each (bank, region) may be activated again after a NACK.

    A NACK received at cycle ``t`` forbids another ACT to the region before
    ``t + ARI``.
    """

    def __init__(self, ari_cycles):
        self.ari_cycles = ari_cycles
        self._until = {}

    def __len__(self):
        return len(self._until)

    def on_nack(self, bank, region, now):
        key = (bank, region)
        self._until[key] = max(self._until.get(key, 0), now + self.ari_cycles)

    def earliest(self, bank, region, now):
        until = self._until.get((bank, region))
        if until is None:
            return now
        if until <= now:
            del self._until[bank, region]
            return now
        return until

    def blocked(self, bank, region, now):
        return self.earliest(bank, region, now) > now
