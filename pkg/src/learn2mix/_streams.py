"""Deterministic RNG streams keyed by (seed, domain, *key).

Every stochastic component draws from its own numpy Generator derived via
SeedSequence from the run seed, a fixed domain tag, and a component key
(class index, epoch number, ...). Content is therefore independent of
execution order and of how work is split across classes or processes.

Domain tags must stay distinct: two components that shared a tag and a key
would consume identical streams.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidSize

DOMAIN_DATA_TRAIN = 11
DOMAIN_DATA_TEST = 12
DOMAIN_NET_INIT = 21
DOMAIN_CLASS_SHUFFLE = 31
DOMAIN_POOLED_SHUFFLE = 32
DOMAIN_SUBSET_DRAW = 33
DOMAIN_WARMUP_SHUFFLE = 34
DOMAIN_IMBALANCE = 41
DOMAIN_SMOTE = 42


def stream(seed: int, domain: int, *key: int) -> np.random.Generator:
    """Return the Generator for (seed, domain, key...).

    Raises InvalidSize for negative seeds; SeedSequence entropy must be
    nonnegative.
    """
    if seed < 0:
        raise InvalidSize(f"seed must be nonnegative, got {seed}")
    return np.random.default_rng(np.random.SeedSequence([seed, domain, *key]))
