"""Deterministic random-stream derivation.

Every stochastic component draws from its own substream keyed by
(master_seed, experiment, n, replication, component, ...).  Streams are
PCG64 generators seeded through numpy's SeedSequence so that substreams are
independent and the whole run is reproducible from the master seed alone.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_words(keys) -> list[int]:
    words = []
    for k in keys:
        if isinstance(k, str):
            words.append(zlib.crc32(k.encode("utf-8")))
        elif isinstance(k, (int, np.integer)):
            words.append(int(k) & 0xFFFFFFFF)
            words.append((int(k) >> 32) & 0xFFFFFFFF)
        else:
            raise TypeError(f"substream key must be str or int, got {type(k)!r}")
    return words


def substream(master_seed: int, *keys) -> np.random.Generator:
    """Generator for the substream identified by (master_seed, *keys)."""
    ss = np.random.SeedSequence(entropy=int(master_seed),
                                spawn_key=tuple(_key_words(keys)))
    return np.random.Generator(np.random.PCG64(ss))
