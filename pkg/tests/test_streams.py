import numpy as np

from extremeabc import streams


def test_paths_are_normalized():
    assert streams.as_path(5) == (5,)
    assert streams.as_path([1, 2]) == (1, 2)
    assert streams.as_path(np.int64(3)) == (3,)


def test_generators_are_deterministic_and_distinct():
    a = streams.generator(1, 2, 3).random(5)
    assert np.array_equal(a, streams.generator(1, 2, 3).random(5))
    assert not np.array_equal(a, streams.generator(1, 2, 4).random(5))
    assert not np.array_equal(a, streams.generator(2, 2, 3).random(5))


def test_block_streams_seek():
    bs = streams.BlockStreams.from_seed(4, streams.SIMULATION)
    first = bs.generator(7).random(10)
    bs.generator(2).random(1000)
    assert np.array_equal(bs.generator(7).random(10), first)
    assert not np.array_equal(bs.generator(8).random(10), first)
