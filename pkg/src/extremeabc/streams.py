"""Counter-based random streams.

Every random quantity in the package is addressed by a path of integers
(master seed, stage, iteration, ...). The path is hashed into a Philox key and
sub-streams inside one key are selected by the top word of the Philox counter,
so stream ``b`` never overlaps stream ``b + 1`` and any worker can jump straight
to the stream it needs. Results therefore do not depend on how work is split
across threads.
"""
import numpy as np

# Named sub-paths so different consumers of one iteration never share a stream.
PRIOR = 0
SIMULATION = 1
MUTATION = 2
RESAMPLE = 3


def as_path(seed):
    """Normalize an integer seed or an integer tuple into a path tuple."""
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def derive_key(seed, *path):
    """128-bit Philox key for ``(seed, *path)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return ss.generate_state(2, dtype=np.uint64)


def generator(seed, *path):
    """A fresh ``numpy.random.Generator`` on the stream addressed by the path."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *path)))


class BlockStreams:
    """One Philox bit generator that can be repositioned on sub-stream ``b``."""

    def __init__(self, key):
        self.key = np.asarray(key, dtype=np.uint64)
        self.bitgen = np.random.Philox(key=self.key)
        self._counter = np.zeros(4, dtype=np.uint64)
        self._state = {
            "bit_generator": "Philox",
            "state": {"counter": self._counter, "key": self.key},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }

    @classmethod
    def from_seed(cls, seed, *path):
        return cls(derive_key(seed, *path))

    def seek(self, index):
        self._counter[:] = (0, 0, 0, index)
        self.bitgen.state = self._state

    def generator(self, index):
        """Generator positioned at the start of sub-stream ``index``."""
        self.seek(index)
        return np.random.Generator(self.bitgen)
