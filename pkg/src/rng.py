"""
Explicit, splittable random state.

An Rng is a plain value: (seed, stream path, counter). Drawing never mutates
it; callers take `generator()` for a bounded batch of draws and continue with
`advance()`. Independent sub-streams come from `spawn(...)`.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class Rng:
    seed: int
    path: Tuple[int, ...] = ()
    counter: int = 0

    def generator(self) -> np.random.Generator:
        """Counter-based generator for the current state."""
        seq = np.random.SeedSequence(self.seed, spawn_key=self.path + (self.counter,))
        return np.random.Generator(np.random.Philox(seq))

    def advance(self) -> "Rng":
        return Rng(self.seed, self.path, self.counter + 1)

    def spawn(self, *keys: int) -> "Rng":
        """Child stream keyed by `keys`; independent of the parent and its siblings."""
        return Rng(self.seed, self.path + (self.counter,) + tuple(keys), 0)
