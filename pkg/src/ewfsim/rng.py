"""Counter-based random streams for reproducible, order-independent sampling.

Every random draw in this package comes from a Philox4x64 generator
("philox4x64-v1" in reports) addressed by three coordinates:

  key word 0   = global seed
  key word 1   = stream id (one per independent sampling task)
  counter word 2 = trial index

Draws inside a trial are consumed sequentially from that trial's counter
block (the draw index). Distinct (seed, stream, trial) triples give
non-overlapping streams, so trials can run in any order or in parallel and
still reproduce byte-identical statistics.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "philox4x64-v1"

_MASK64 = (1 << 64) - 1


def trial_generator(seed: int, trial: int = 0, stream: int = 0) -> np.random.Generator:
    """Generator positioned at the start of one trial's counter block."""
    if seed < 0 or trial < 0 or stream < 0:
        raise ValueError("seed, trial, and stream must be non-negative")
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, trial & _MASK64, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
