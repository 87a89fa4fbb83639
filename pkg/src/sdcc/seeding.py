"""Counter-based sub-seed derivation.

Every random sub-computation gets its own seed computed from a parent seed
and a tuple of integer or string keys::

    derive_seed(seed, *keys) = first uint64 word of
        numpy.random.SeedSequence(seed mod 2**64, spawn_key=(key_0, key_1, ...))

String keys are mapped to integers with CRC-32, so ``derive_seed(42,
"wine", "folds")`` is stable across processes and Python versions.  Integer
keys must fit in 32 bits, which keeps every key a single entropy word and
the encoding unambiguous.  Because the derivation is a pure function of its
arguments, any fold, discretizer or metric-learning fit can be reproduced on
its own.
"""

import zlib

import numpy as np

from .errors import InvalidArgument

_MASK64 = (1 << 64) - 1


def _key(k):
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    k = int(k)
    if not 0 <= k < 1 << 32:
        raise InvalidArgument(f"integer seed keys must lie in [0, 2**32), got {k}")
    return k


def derive_seed(seed, *keys):
    """Return a 64-bit sub-seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(_key(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng(seed, *keys):
    """A ``numpy.random.Generator`` seeded with ``derive_seed(seed, *keys)``."""
    return np.random.default_rng(derive_seed(seed, *keys))
