import enum

from smd_sim.exceptions import ConfigError


class DivergencePolicy(str, enum.Enum):
    """What the controller does when only some chips of a rank NACK an ACT.

    ``precharge`` closes the partially opened row and tries again later,
    ``wait`` retries the same row once ARI has passed and ``hybrid`` picks
    precharge when enough requests to other regions of the bank are waiting.
    """

    PRECHARGE = "precharge"
    WAIT = "wait"
    HYBRID = "hybrid"

    @classmethod
    def parse(cls, value):
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(
                f"Unknown divergence policy {value!r}, expected one of "
                f"{', '.join(p.value for p in cls)}"
            ) from None

    def resolve(self, waiting_elsewhere, threshold=4):
        if self is DivergencePolicy.HYBRID:
            if waiting_elsewhere >= threshold:
                return DivergencePolicy.PRECHARGE
            return DivergencePolicy.WAIT
        return self
