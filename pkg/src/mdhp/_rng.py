import zlib

import numpy as np


def derive_rng(master_seed: int, component: str, *index: int) -> np.random.Generator:
    """Independent generator for ``(component, *index)`` under ``master_seed``.

    Streams depend only on the names and indices, never on the order in
    which they are requested, so parallel generation is schedule-independent.
    """
    key = [int(master_seed), zlib.crc32(component.encode("utf-8"))]
    key.extend(int(i) for i in index)
    return np.random.default_rng(np.random.SeedSequence(key))
