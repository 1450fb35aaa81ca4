import gzip
import heapq

from smd_sim.timing.commands import Command


def _open(path, mode):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t")
    return open(path, mode)


class CommandLog(list):
    """A container for the commands issued on one channel, in issue order."""

    def dumps(self):
        return "".join(c.dumps() + "\n" for c in self)

    @classmethod
    def loads(cls, text):
        return cls(
            Command.loads(line)
            for line in text.splitlines()
            if line.strip() and not line.startswith("#")
        )

    def write(self, path):
        with _open(path, "w") as f:
            f.write(self.dumps())

    @classmethod
    def read(cls, path):
        with _open(path, "r") as f:
            return cls.loads(f.read())


class CommandLogs(dict):
    """A container for multiple command logs keyed by channel."""

    def merged(self):
        """Every channel's commands as one log ordered by issue time."""
        return CommandLog(
            heapq.merge(*self.values(), key=lambda c: (c.issue_time, c.target.channel))
        )

    def write(self, path):
        self.merged().write(path)
