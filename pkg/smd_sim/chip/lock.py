import enum

import numpy as np

from smd_sim.exceptions import ProtocolError


class LockResult(enum.Enum):
    LOCKED = "locked"
    BUSY_OPEN_ROW = "busy-open-row"
    BUSY_LOCKED = "busy-locked"
    BUSY_BANK = "busy-bank"


def blocked_subarrays(region, geometry):
    """Subarrays a locked ``region`` makes inaccessible.

    With an open-bitline array neighbouring subarrays share sense amplifiers, so
    the subarray on either side of the region is blocked too.

    >>> from smd_sim.chip.geometry import Geometry
    >>> sorted(blocked_subarrays(1, Geometry(subarrays_per_region=16, rows_per_subarray=32)))[:3]
    [15, 16, 17]
    """
    if not 0 <= region < geometry.regions_per_bank:
        raise ValueError(f"Region {region} does not exist")
    first = region * geometry.subarrays_per_region
    last = first + geometry.subarrays_per_region - 1
    if geometry.open_bitline:
        first = max(0, first - 1)
        last = min(geometry.subarrays_per_bank - 1, last + 1)
    return frozenset(range(first, last + 1))


class LockRegionTable:
    """Lock bits for the regions of one bank, and who holds each lock."""

    def __init__(self, regions):
        self.bits = np.zeros(regions, dtype=bool)
        self.owners = [None] * regions
        self.held = 0

    def __len__(self):
        return len(self.owners)

    def is_locked(self, region):
        return bool(self.bits[region])

    def owner(self, region):
        return self.owners[region]

    def locked_regions(self):
        return np.flatnonzero(self.bits).tolist()

    def lock(self, region, owner):
        if self.bits[region]:
            raise ProtocolError(f"Region {region} is already locked by {self.owners[region]}")
        self.bits[region] = True
        self.owners[region] = owner
        self.held += 1

    def release(self, region, owner):
        if not self.bits[region]:
            raise ProtocolError(f"Region {region} is not locked")
        if self.owners[region] != owner:
            raise ProtocolError(
                f"Region {region} is locked by {self.owners[region]}, not {owner}"
            )
        self.bits[region] = False
        self.owners[region] = None
        self.held -= 1
