"""Named, scheduling-independent random sub-streams derived from one seed."""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, stage: str, *keys: int) -> np.random.Generator:
    """Generator for ``(seed, stage, *keys)``.

    The same triple always yields the same stream, regardless of which other
    streams were drawn before it.
    """
    spawn_key = (zlib.crc32(stage.encode()),) + tuple(int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))
