import logging
from bisect import bisect_right
from typing import Dict, Sequence

import numpy as np


logger = logging.getLogger(__name__)

STREAM_NAMES = ("arrivals", "service", "labels", "mitigation", "taps")
BLOCK_SIZE = 4096


class RandomStream:
    """Counter-based Philox generator with block-buffered draws."""

    def __init__(self, seed_sequence: np.random.SeedSequence, block_size: int = BLOCK_SIZE):
        self._generator = np.random.Generator(np.random.Philox(seed_sequence))
        self._block_size = block_size
        self._uniforms = np.empty(0)
        self._u_pos = 0
        self._exponentials = np.empty(0)
        self._e_pos = 0

    def uniform(self) -> float:
        if self._u_pos >= self._uniforms.size:
            self._uniforms = self._generator.random(self._block_size)
            self._u_pos = 0
        value = self._uniforms[self._u_pos]
        self._u_pos += 1
        return float(value)

    def exponential(self, mean: float) -> float:
        if self._e_pos >= self._exponentials.size:
            self._exponentials = self._generator.standard_exponential(self._block_size)
            self._e_pos = 0
        value = self._exponentials[self._e_pos]
        self._e_pos += 1
        return float(value) * mean

    def integer(self, high: int) -> int:
        """Uniform integer in [0, high)."""
        return min(int(self.uniform() * high), high - 1)

    def choice(self, cumulative: Sequence[float]) -> int:
        """Index drawn from a cumulative probability table."""
        index = bisect_right(cumulative, self.uniform() * cumulative[-1])
        return min(index, len(cumulative) - 1)


def trial_streams(seed: int, trial_index: int) -> Dict[str, RandomStream]:
    """Independent named streams for one trial, derived from (seed, trial_index) only."""
    root = np.random.SeedSequence(seed, spawn_key=(trial_index,))
    return {
        name: RandomStream(child)
        for name, child in zip(STREAM_NAMES, root.spawn(len(STREAM_NAMES)))
    }
