"""Small construction helpers shared by the test modules."""

from __future__ import annotations

import numpy as np

from pollheap.model import ElectionDataset


def make_dataset(registered, given, cast, leader, regions=None, label="test"):
    """Dataset from plain count lists, with optional region codes."""
    return ElectionDataset.from_arrays(
        label,
        np.asarray(registered, dtype=np.int64),
        np.asarray(given, dtype=np.int64),
        np.asarray(cast, dtype=np.int64),
        np.asarray(leader, dtype=np.int64),
        region_codes=regions,
    )


def random_counts(rng, n, max_registered=3000):
    """Random station counts satisfying 0 <= L <= B <= G <= V."""
    v = rng.integers(1, max_registered + 1, size=n)
    g = rng.binomial(v, rng.uniform(0.2, 0.95, size=n))
    b = rng.binomial(g, rng.uniform(0.9, 1.0, size=n))
    l = rng.binomial(b, rng.uniform(0.1, 0.9, size=n))
    return v, g, b, l
