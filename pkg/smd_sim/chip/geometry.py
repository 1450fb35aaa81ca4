from dataclasses import dataclass, replace
from typing import Optional

from smd_sim.config import section
from smd_sim.exceptions import ConfigError
from smd_sim.timing.commands import Address

ADDRESS_FIELDS = ("channel", "rank", "bankgroup", "bank", "row", "column")


@dataclass(frozen=True)
class Geometry:
    """Organisation of the memory system, from channels down to rows.

    A bank is split into ``regions_per_bank`` lock regions, each a run of
    ``subarrays_per_region`` consecutive subarrays. Physical addresses are
    bit-sliced according to ``address_layout``, most significant field first,
    with the cache line offset in the low bits.
    """

    channels: int = 1
    ranks_per_channel: int = 1
    chips_per_rank: int = 8
    bankgroups: int = 4
    banks_per_group: int = 2
    regions_per_bank: int = 16
    subarrays_per_region: int = 16
    rows_per_subarray: int = 32
    row_size_bytes: int = 8192
    rows_per_ref: Optional[int] = 16
    open_bitline: bool = True
    address_layout: tuple = ("row", "rank", "bank", "bankgroup", "channel", "column")
    refs_per_window: int = 8192
    line_size: int = 64

    def __post_init__(self):
        for name in (
            "channels",
            "ranks_per_channel",
            "chips_per_rank",
            "bankgroups",
            "banks_per_group",
            "regions_per_bank",
            "subarrays_per_region",
            "rows_per_subarray",
            "row_size_bytes",
            "refs_per_window",
            "line_size",
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"Geometry field {name} must be a positive integer, got {value!r}")
        if self.rows_per_ref is not None and self.rows_per_ref < 1:
            raise ConfigError("rows_per_ref must be positive")
        if sorted(self.address_layout) != sorted(ADDRESS_FIELDS):
            raise ConfigError(
                f"address_layout must order exactly the fields {', '.join(ADDRESS_FIELDS)}"
            )
        if self.row_size_bytes % self.line_size:
            raise ConfigError("row_size_bytes must be a multiple of line_size")
        for name, count in self.field_sizes.items():
            if count & (count - 1):
                raise ConfigError(f"The {name} count ({count}) must be a power of two")
        if self.line_size & (self.line_size - 1):
            raise ConfigError("line_size must be a power of two")

    @classmethod
    def from_config(cls, config=None, profile=None, **overrides):
        cfg = section("geometry") if config is None else config
        name = profile or cfg.get("profile")
        profiles = cfg.get("profiles", {}) or {}
        if name not in profiles:
            raise ConfigError(
                f"Unknown geometry profile {name!r}, expected one of {', '.join(profiles)}"
            )
        kwargs = dict(profiles[name])
        kwargs["open_bitline"] = cfg.get("open_bitline", True)
        if cfg.get("address_layout"):
            kwargs["address_layout"] = tuple(cfg.get("address_layout"))
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigError(f"Invalid geometry profile {name!r}: {e}") from e

    def with_regions(self, regions):
        """Re-partition each bank into ``regions`` lock regions, keeping its size."""
        total = self.subarrays_per_bank
        if regions < 1 or total % regions:
            raise ConfigError(
                f"{regions} regions do not evenly divide {total} subarrays per bank"
            )
        return replace(self, regions_per_bank=regions, subarrays_per_region=total // regions)

    @property
    def rows_per_region(self):
        return self.subarrays_per_region * self.rows_per_subarray

    @property
    def subarrays_per_bank(self):
        return self.regions_per_bank * self.subarrays_per_region

    @property
    def rows_per_bank(self):
        return self.subarrays_per_bank * self.rows_per_subarray

    @property
    def banks_per_rank(self):
        return self.bankgroups * self.banks_per_group

    @property
    def banks_per_channel(self):
        return self.banks_per_rank * self.ranks_per_channel

    @property
    def total_banks(self):
        return self.banks_per_channel * self.channels

    @property
    def total_ranks(self):
        return self.ranks_per_channel * self.channels

    @property
    def columns_per_row(self):
        return self.row_size_bytes // self.line_size

    @property
    def capacity_bytes(self):
        return self.total_banks * self.rows_per_bank * self.row_size_bytes

    @property
    def ref_rows(self):
        """Rows of every bank refreshed by one REF command."""
        if self.rows_per_ref is not None:
            return self.rows_per_ref
        return max(1, self.rows_per_bank // self.refs_per_window)

    @property
    def field_sizes(self):
        return {
            "channel": self.channels,
            "rank": self.ranks_per_channel,
            "bankgroup": self.bankgroups,
            "bank": self.banks_per_group,
            "row": self.rows_per_bank,
            "column": self.columns_per_row,
        }

    def region_of(self, row):
        return row // self.rows_per_region

    def subarray_of(self, row):
        return row // self.rows_per_subarray

    def region_rows(self, region):
        first = region * self.rows_per_region
        return range(first, first + self.rows_per_region)

    def decompose(self, paddr):
        """Split a physical byte address into its DRAM coordinates."""
        if paddr < 0 or paddr >= self.capacity_bytes:
            raise ValueError(f"Physical address {paddr:#x} is outside the memory")
        value = paddr // self.line_size
        fields = {}
        sizes = self.field_sizes
        for name in reversed(self.address_layout):
            value, fields[name] = divmod(value, sizes[name])
        row = fields["row"]
        return Address(
            channel=fields["channel"],
            rank=fields["rank"],
            bankgroup=fields["bankgroup"],
            bank=fields["bank"],
            region=self.region_of(row),
            subarray=self.subarray_of(row),
            row=row,
            column=fields["column"],
        )

    def compose(self, address):
        """Inverse of ``decompose``, giving the first byte of the addressed line."""
        sizes = self.field_sizes
        value = 0
        for name in self.address_layout:
            value = value * sizes[name] + getattr(address, name)
        return value * self.line_size

    def locate(self, address, row):
        """``address`` moved to ``row`` with its region and subarray filled in."""
        return replace(
            address, row=row, region=self.region_of(row), subarray=self.subarray_of(row)
        )

    def flat_bank(self, address):
        """Index of the addressed bank within its channel."""
        return (
            address.rank * self.bankgroups + address.bankgroup
        ) * self.banks_per_group + address.bank

    def bank_address(self, channel, flat_bank):
        rank, rest = divmod(flat_bank, self.banks_per_rank)
        bankgroup, bank = divmod(rest, self.banks_per_group)
        return Address(channel=channel, rank=rank, bankgroup=bankgroup, bank=bank)
