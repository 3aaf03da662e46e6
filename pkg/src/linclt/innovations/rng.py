"""Counter-based random streams keyed by (seed, replicate index).

Every stream is a numpy ``Philox`` (4x64, 10 rounds) generator whose key is
derived by ``SeedSequence(entropy=[seed & 2**64-1, *keys])``. The same key
always produces the same stream, independent of thread scheduling.
"""

import numpy as np

UINT64_MASK = (1 << 64) - 1


def make_generator(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator for ``seed`` and optional sub-stream ``keys``."""
    entropy = [seed & UINT64_MASK, *(k & UINT64_MASK for k in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def replicate_seed(master_seed: int, index: int) -> int:
    """Derive the 64-bit seed of replicate ``index`` from the master seed."""
    seq = np.random.SeedSequence([master_seed & UINT64_MASK, index])
    return int(seq.generate_state(1, dtype=np.uint64)[0])
