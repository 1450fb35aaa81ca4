import pytest

from smd_sim.exceptions import FrameExhaustedError
from smd_sim.frontend import PageMapper, translate


def test_same_page_same_frame():
    mapper = PageMapper(1024)
    a = mapper.translate(0x1234)
    b = mapper.translate(0x1FFF)
    assert a // 4096 == b // 4096
    assert a % 4096 == 0x234
    assert b % 4096 == 0xFFF
    assert len(mapper) == 1
    assert translate(0x1000, mapper) == a - 0x234


def test_seeded():
    def frames(seed):
        mapper = PageMapper(1 << 20, seed=seed)
        return [mapper.translate(page * 4096) for page in range(100)]

    assert frames(1) == frames(1)
    assert frames(1) != frames(2)


def test_no_shared_frames():
    mapper = PageMapper(12_000, seed=3)
    frames = {mapper.translate(page * 4096) // 4096 for page in range(10_000)}
    assert len(frames) == 10_000
    assert all(0 <= f < 12_000 for f in frames)


def test_address_spaces():
    mapper = PageMapper(64)
    assert mapper.translate(0, space=0) != mapper.translate(0, space=1)
    assert mapper.translate(0, space=1) == mapper.translate(0, space=1)
    assert len(mapper) == 2


def test_exhaustion():
    mapper = PageMapper(4, page_size=64)
    frames = {mapper.translate(page * 64) // 64 for page in range(4)}
    assert frames == {0, 1, 2, 3}
    with pytest.raises(FrameExhaustedError):
        mapper.translate(4 * 64)


def test_needs_frames():
    with pytest.raises(ValueError):
        PageMapper(0)
