from smd_sim.exceptions import FrameExhaustedError
from smd_sim.utils.rng import stream


class PageMapper:
    """Maps each virtual page to a random physical frame on first touch.

    Frames are drawn without replacement so no two pages share a frame. Each
    core gets its own address space drawing from the shared frame pool.
    """

    def __init__(self, frames, page_size=4096, seed=0):
        if frames < 1:
            raise ValueError("The mapper needs at least one frame")
        self.frames = frames
        self.page_size = page_size
        self.rng = stream(seed, "page-mapper")
        self.table = {}
        self._used = set()
        self._free = None

    def __len__(self):
        return len(self.table)

    def translate(self, vaddr, space=0):
        """Physical address of ``vaddr`` in address space ``space``."""
        page, offset = divmod(vaddr, self.page_size)
        key = (space, page)
        frame = self.table.get(key)
        if frame is None:
            frame = self.table[key] = self._allocate()
        return frame * self.page_size + offset

    def _allocate(self):
        if len(self._used) >= self.frames:
            raise FrameExhaustedError(f"All {self.frames} physical frames are in use")
        if self._free is None and len(self._used) * 2 < self.frames:
            while True:
                frame = int(self.rng.integers(self.frames))
                if frame not in self._used:
                    break
        else:
            # Most frames are taken, draw from the remaining ones directly
            if self._free is None:
                self._free = [f for f in range(self.frames) if f not in self._used]
            index = int(self.rng.integers(len(self._free)))
            self._free[index], self._free[-1] = self._free[-1], self._free[index]
            frame = self._free.pop()
        self._used.add(frame)
        return frame


def translate(vaddr, mapper, space=0):
    return mapper.translate(vaddr, space)
