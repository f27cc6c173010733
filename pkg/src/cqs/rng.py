"""Seedable randomness: one master generator threaded through every
stochastic operation, plus counter-based sub-streams for per-cell kernels."""
import numpy as np

MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def ensure_rng(seed_or_rng):
    """Coerce an int seed / Generator / None into a Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def step_key(rng):
    """Draw a 64-bit key used to seed a kernel's counter-based stream."""
    return np.uint64(rng.integers(0, 2**63 - 1, dtype=np.int64))


def splitmix64(x):
    """SplitMix64 hash of a uint64 array (or scalar), vectorized."""
    x = (np.asarray(x, dtype=np.uint64) + np.uint64(0x9E3779B97F4A7C15)) & MASK64
    z = x
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & MASK64
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & MASK64
    return z ^ (z >> np.uint64(31))


def hash_uniform(key, idx):
    """Deterministic uniforms in [0,1) for (key, idx) pairs."""
    h = splitmix64(np.asarray(idx, dtype=np.uint64) ^ splitmix64(key))
    return h.astype(np.float64) / 2.0**64
