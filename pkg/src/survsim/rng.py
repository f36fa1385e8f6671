"""Named random streams derived from one master seed.

Each concern draws from its own stream so that, for a given seed, changing
the replication technique never perturbs mobility or failure draws.
"""

import numpy as np

STREAMS = {
    "placement": 0,
    "mobility": 1,
    "radio": 2,
    "failures": 3,
    "data": 4,
    "hello": 5,
}


def stream(seed: int, name: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(
        entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(STREAMS[name],))))


class UniformBuffer:
    """Scalar uniforms served from pre-drawn blocks of one generator.

    The sequence is identical to the generator's own ``random()`` output,
    only cheaper per draw.
    """

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self.block = block
        self._buf: list[float] = []
        self._pos = 0

    def random(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self.rng.random(self.block).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()
