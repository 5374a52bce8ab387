"""Label-derived seeding.

Every random stream is derived from a parent seed and a tuple of labels, so
any slice of an experiment can be recomputed without replaying the rest.
"""
import hashlib

import numpy as np


def derive_seed(seed, *labels):
    """Hash ``seed`` together with ``labels`` into a 63-bit child seed."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr(int(seed)).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(repr(label).encode())
    return int.from_bytes(h.digest(), "little") >> 1


def make_rng(seed, *labels):
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *labels)))
