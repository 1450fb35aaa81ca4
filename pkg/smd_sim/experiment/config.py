import copy
import logging

import dask
import yaml

from smd_sim.config import SimConfig, duration_ns
from smd_sim.exceptions import ConfigError
from smd_sim.maintenance.factory import DIVERGENCE, mechanisms_for

logger = logging.getLogger(__name__)

AXES = {
    "refresh_period": ("timing.trefw",),
    "regions_per_bank": ("experiment.regions_per_bank",),
    "act_max": ("maintenance.drp.act_max", "maintenance.prp_plus.act_max"),
    "blast_distance": (
        "maintenance.prp.blast_distance",
        "maintenance.drp.blast_distance",
        "controller.para.blast_distance",
    ),
    "p_mark": ("maintenance.prp.p_mark", "maintenance.prp_plus.p_mark", "controller.para.p_mark"),
    "scrub_period": ("maintenance.ms.scrub_period", "controller.scrub.period"),
    "ari": ("timing.ari",),
}

# Which mechanisms (inside the chip) or modes (in the controller) each setting applies to
_OWNERS = {
    "maintenance.vr": {"vr"},
    "maintenance.prp": {"prp", "prp_plus"},
    "maintenance.prp_plus": {"prp_plus"},
    "maintenance.drp": {"drp"},
    "maintenance.ms": {"ms"},
    "controller.para": {"mc-para"},
    "controller.scrub": {"ddr4-scrub"},
}


def _flatten(tree, prefix=""):
    for key, value in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict) and value:
            yield from _flatten(value, dotted + ".")
        else:
            yield dotted


class ExperimentConfig:
    """Everything one simulation run needs, as a single config tree.

    The tree starts from the ``smdsim`` defaults known to dask and is updated
    from experiment files and ``set`` calls. Keys given explicitly are
    remembered so settings that cannot affect the chosen mode are rejected.

    Example
    -------

    >>> cfg = ExperimentConfig().set("experiment.mode", "smd-drp").set("maintenance.drp.act_max", 256)
    >>> cfg.mode
    'smd-drp'
    """

    def __init__(self, tree=None, explicit=()):
        base = copy.deepcopy(dask.config.get("smdsim", {}))
        if tree:
            if "smdsim" in tree and len(tree) == 1:
                tree = tree["smdsim"]
            base = dask.config.merge(base, tree)
            explicit = set(explicit) | set(_flatten(tree))
        self.tree = base
        self.explicit = frozenset(explicit)
        self.config = SimConfig(self.tree)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as f:
                tree = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Cannot read experiment file {path}: {e}") from e
        if not isinstance(tree, dict):
            raise ConfigError(f"Experiment file {path} must hold a mapping")
        return cls(tree)

    def __repr__(self):
        return f"<ExperimentConfig mode={self.mode} seed={self.seed}>"

    def get(self, key, default=None):
        return self.config.get(key, default)

    def section(self, name):
        return SimConfig(self.get(name, {}) or {})

    def set(self, key, value):
        """A copy with dotted ``key`` set to ``value``."""
        tree = copy.deepcopy(self.tree)
        # Not used as a context manager, so the change is kept
        dask.config.set({key: value}, config=tree)
        return _restore(tree, self.explicit | {key})

    def with_axis(self, axis, value):
        """A copy with sweep ``axis`` set to ``value``, for every setting it drives."""
        if axis not in AXES:
            raise ConfigError(f"Unknown sweep axis {axis!r}, expected one of {', '.join(AXES)}")
        keys = [k for k in AXES[axis] if self._applies(k)]
        if not keys:
            raise ConfigError(f"Sweeping {axis} has no effect in mode {self.mode!r}")
        new = self
        for key in keys:
            new = new.set(key, value)
        if axis == "refresh_period":
            refs = new.get("timing.refs_per_window", 8192)
            new = new.set("timing.trefi", duration_ns(value) / refs)
        return new

    @property
    def mode(self):
        return self.get("experiment.mode")

    @property
    def seed(self):
        return self.get("experiment.seed", 0)

    @property
    def mechanisms(self):
        return mechanisms_for(self.mode, self.section("maintenance"))

    def _applies(self, key):
        for prefix, owners in _OWNERS.items():
            if key == prefix or key.startswith(prefix + "."):
                return bool(owners & (set(self.mechanisms) | {self.mode}))
        return True

    def validate(self):
        """Raise ``ConfigError`` if the settings do not make a runnable experiment."""
        mode = self.mode
        mechanisms = self.mechanisms
        divergence = self.get("experiment.divergence", "lock-step")
        if divergence not in DIVERGENCE:
            raise ConfigError(
                f"Unknown divergence scenario {divergence!r}, expected one of {', '.join(DIVERGENCE)}"
            )
        if divergence != "lock-step" and not mechanisms:
            raise ConfigError(f"Mode {mode!r} runs no in-chip maintenance, chips cannot diverge")
        cores = self.get("experiment.cores", 1)
        if not isinstance(cores, int) or cores < 1:
            raise ConfigError(f"experiment.cores must be a positive integer, got {cores!r}")
        traces = self.get("experiment.traces") or []
        synthetic = self.get("experiment.synthetic") or []
        if not traces and not synthetic:
            raise ConfigError("No traces or synthetic trace generators configured")
        for key in sorted(self.explicit):
            if not self._applies(key):
                raise ConfigError(f"{key} has no effect in mode {mode!r}")
        if self.get("experiment.run_instructions", 0) < 1:
            raise ConfigError("experiment.run_instructions must be positive")
        return self

    def __reduce__(self):
        # SimConfig cannot be rebuilt by pickle, restore from the plain tree
        return _restore, (self.tree, self.explicit)


def _restore(tree, explicit):
    config = ExperimentConfig.__new__(ExperimentConfig)
    config.tree = tree
    config.explicit = explicit
    config.config = SimConfig(tree)
    return config
