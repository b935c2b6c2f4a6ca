"""Shannon entropy of byte sequences, in bits per byte."""

from __future__ import annotations

import numpy as np


def shannon_entropy(data: bytes | bytearray | memoryview) -> float:
    """Entropy of the byte histogram of ``data``, base-2, in [0, 8].

    Empty input is defined as 0.0. Depends only on the histogram, so any
    permutation of the input yields the same value.
    """
    if len(data) == 0:
        return 0.0
    counts = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=256)
    probs = counts[counts > 0] / len(data)
    return float(-np.sum(probs * np.log2(probs)))
