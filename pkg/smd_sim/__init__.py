from . import config

__version__ = "0.1.0"


def __getattr__(name):
    """Components live in their own subpackages.

    We keep some helpful errors at the top level for anyone who tries to import
    a component from the package root because they saw it used without the import.

    """

    if name in ["SmdChip", "BaselineChip", "Rank", "Geometry"]:
        raise ImportError(
            "Chip models must be imported from the chip subpackage. "
            f"Please import smd_sim.chip.{name}"
        )

    if name in ["MemoryController"]:
        raise ImportError(
            "The memory controller must be imported from the controller subpackage. "
            f"Please import smd_sim.controller.{name}"
        )

    if name in ["run", "sweep", "ExperimentConfig"]:
        raise ImportError(
            "Experiment drivers must be imported from the experiment subpackage. "
            f"Please import smd_sim.experiment.{name}"
        )

    raise AttributeError(f"module 'smd_sim' has no attribute {name!r}")
