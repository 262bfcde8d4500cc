"""Utility modules."""

from .seeding import derive_rng, derive_seed_sequence

__all__ = ['derive_rng', 'derive_seed_sequence']
