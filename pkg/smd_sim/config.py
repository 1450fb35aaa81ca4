import os

import dask
import yaml
from dask.utils import parse_timedelta

from smd_sim.exceptions import ConfigError


class SimConfig(dict):
    """Simple config interface for simulator components.

    Enables '.' notation for nested access, as per `dask.config.get`.

    Example
    -------

    >>> from smd_sim.config import SimConfig
    >>> class Engine:
    ...     def __init__(self, rg=None):
    ...         self.config = SimConfig(dask.config.get("smdsim.maintenance", {}))
    ...         self.rg = self.config.get("fr.rg", override_with=rg)

    """

    def __new__(cls, d):
        return super().__new__(cls, d)

    def get(self, key, default=None, override_with=None):
        return dask.config.get(
            key, default=default, config=self, override_with=override_with
        )


def section(name, config=None):
    """Return a ``SimConfig`` for ``smdsim.<name>`` or for ``name`` inside ``config``."""
    if config is None:
        return SimConfig(dask.config.get(f"smdsim.{name}", {}))
    return SimConfig(dask.config.get(name, {}, config=config))


def duration_ns(value):
    """Convert a configured duration to nanoseconds.

    Numbers are taken to be nanoseconds already. Strings are parsed with
    ``dask.utils.parse_timedelta`` so "3900 ns", "32 ms" and "5 minutes" all work.
    The result is rounded to whole picoseconds.
    """
    if value is None:
        raise ConfigError("A duration is required but none was configured")
    if isinstance(value, bool):
        raise ConfigError(f"Invalid duration {value!r}")
    if isinstance(value, (int, float)):
        ns = float(value)
    else:
        try:
            seconds = parse_timedelta(value, default="ns")
        except (ValueError, KeyError, TypeError) as e:
            raise ConfigError(f"Invalid duration {value!r}") from e
        ns = round(seconds * 1e12) / 1000
    if ns < 0:
        raise ConfigError(f"Durations must be non-negative, got {value!r}")
    return ns


fn = os.path.join(os.path.dirname(__file__), "smdsim.yaml")
dask.config.ensure_file(source=fn)

with open(fn) as f:
    defaults = yaml.safe_load(f)

dask.config.update_defaults(defaults)
