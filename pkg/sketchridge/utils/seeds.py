"""Seed plumbing.

Every random object in the package is a pure function of an integer seed. Sub-streams
are keyed as ``SeedSequence([seed, *keys])`` so that, for example, the permutation and
the signs of one SRHT can be regenerated independently of each other.
"""
import numpy as np

_MASK = (1 << 64) - 1


def _entropy(seed: int) -> int:
    # SeedSequence wants non-negative entropy; negative 64-bit seeds wrap around
    return int(seed) & _MASK


def seed_sequence(seed: int, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([_entropy(seed), *(int(k) for k in keys)])


def stream(seed: int, *keys: int) -> np.random.Generator:
    """A generator for sub-stream ``keys`` of ``seed``."""
    return np.random.default_rng(seed_sequence(seed, *keys))


def derive_seed(seed: int, *keys: int) -> int:
    """A fresh 63-bit seed for sub-stream ``keys`` of ``seed``."""
    lo, hi = seed_sequence(seed, *keys).generate_state(2, np.uint32)
    return (int(hi) << 32 | int(lo)) & ((1 << 63) - 1)


def replication_seed(base_seed: int, grid_index: int, replication: int) -> int:
    """Seed of replication ``replication`` at grid point ``grid_index``."""
    ss = np.random.SeedSequence(entropy=_entropy(base_seed), spawn_key=(grid_index, replication))
    lo, hi = ss.generate_state(2, np.uint32)
    return (int(hi) << 32 | int(lo)) & ((1 << 63) - 1)
