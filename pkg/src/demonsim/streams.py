"""Deterministic per-trial random streams.

Every stochastic trial in the package draws from its own counter-based
generator keyed by (master seed, protocol stream id, trial index). Trial j
therefore sees the same draws no matter how trials are sharded across
worker processes, which is what makes sweep outputs byte-identical for any
worker count.
"""

from __future__ import annotations

import numpy as np

FEEDBACK = 1
TRAJECTORY = 2
BOOTSTRAP = 3


def trial_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Generator for one trial, independent of all other trials."""
    ss = np.random.SeedSequence((seed, stream, index))
    return np.random.Generator(np.random.Philox(ss))
