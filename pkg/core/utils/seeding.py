"""Seed derivation so every random stream comes from one top-level seed."""

import zlib

import numpy as np


def derive_seed_sequence(seed: int, stream: str) -> np.random.SeedSequence:
    """Independent SeedSequence for a named stream ('init', 'shuffle', 'data/train', ...)."""
    return np.random.SeedSequence(int(seed), spawn_key=(zlib.crc32(stream.encode("utf-8")),))


def derive_rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed_sequence(seed, stream))
