import time
import warnings

from smd_sim.exceptions import RunTimeout


class Timeout:
    """A wall clock and cycle budget for the simulation loop.

    Create an instance before entering the cycle loop and call ``run(now)``
    once per simulated cycle instead of ``True``.

    Parameters
    ----------
    timeout: float
        Wall clock seconds before the run is abandoned. ``None`` for no limit.

    error_message: str
        Error message to raise in an exception if the budget is exhausted.

    max_cycles: int
        Simulated cycles before the run is abandoned. ``None`` for no limit.

    warn: bool
        Only raise a warning instead of a ``RunTimeout`` and stop the loop.

        Default ``False``.

    check_every: int
        The wall clock is only read every ``check_every`` cycles.

    Examples
    --------
    >>> timeout = Timeout(10, "Simulation took too long", max_cycles=1_000_000)
    >>> now = 0
    >>> while timeout.run(now):
    ...     now = step(now)
    RunTimeout: Simulation took too long

    """

    def __init__(
        self, timeout, error_message, max_cycles=None, warn=False, check_every=4096
    ):
        self.start = None
        self.running = False
        self.timeout = timeout
        self.max_cycles = max_cycles
        self.error_message = error_message
        self.warn = warn
        self.check_every = check_every
        self.exception = RunTimeout(self.error_message)

    def expired(self, now):
        if self.max_cycles is not None and now >= self.max_cycles:
            return True
        if self.timeout is None or now % self.check_every:
            return False
        return time.monotonic() - self.start > self.timeout

    def run(self, now=0):
        """Run the timeout.

        This method when called repeatedly will return ``True`` until the
        budget has been used up. It will then raise or return ``False``.
        """
        if not self.running:
            self.start = time.monotonic()
            self.running = True

        if self.expired(now):
            if self.warn:
                warnings.warn(self.error_message)
                return False
            else:
                raise self.exception
        return True
