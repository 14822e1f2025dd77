"""Deterministic seed derivation.

Every random stream in the package is a numpy Generator seeded from a master
seed and a component name, so independent components never share a stream and
reruns are reproducible regardless of call order.
"""

import hashlib

import numpy as np


def derive_seed(master_seed: int, component: str) -> int:
    """Derive a 64-bit sub-seed from a master seed and a component name."""
    digest = hashlib.sha256(f"{master_seed}:{component}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def child_rng(master_seed: int, component: str) -> np.random.Generator:
    """Generator seeded by derive_seed(master_seed, component)."""
    return np.random.default_rng(derive_seed(master_seed, component))
