"""Cyclic per-class batch construction with wrap-around offsets.

Each class keeps an offset tau into a per-epoch shuffled view of its
store. A batch takes counts_i consecutive positions (mod class size) from
each class's shuffled view, then advances that class's offset. Offsets
persist across epochs while the shuffle is refreshed per epoch, so every
class store is consumed evenly no matter how small its per-batch count is.
A count larger than the class size wraps around and revisits samples
within the same batch; duplicates are kept.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._streams import DOMAIN_CLASS_SHUFFLE, stream
from .errors import InvalidSize
from .mix import BatchPlan

Batch = list  # list of (class_id, sample_index) pairs, class-major


@dataclass(frozen=True)
class CyclicCursor:
    """Per-class offsets tau, the current per-class permutations, and the
    epoch counter (-1 until the first begin_epoch)."""

    tau: np.ndarray
    perms: tuple[np.ndarray, ...]
    epoch: int

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.int64)
        if len(tau) != len(self.perms):
            raise InvalidSize("tau and perms must have one entry per class")
        for i, (t, p) in enumerate(zip(tau, self.perms)):
            if not 0 <= t < len(p):
                raise InvalidSize(f"tau[{i}]={t} outside [0, {len(p)})")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "perms", tuple(self.perms))


def new_cursor(class_sizes: Sequence[int]) -> CyclicCursor:
    """Fresh cursor: all offsets 0, identity permutations, no epoch begun."""
    sizes = [int(n) for n in class_sizes]
    if any(n < 1 for n in sizes):
        raise InvalidSize("every class must have at least one sample")
    return CyclicCursor(
        tau=np.zeros(len(sizes), dtype=np.int64),
        perms=tuple(np.arange(n, dtype=np.int64) for n in sizes),
        epoch=-1,
    )


def begin_epoch(cursor: CyclicCursor, seed: int) -> CyclicCursor:
    """Advance to the next epoch: reshuffle every class view, keep offsets.

    Permutations are drawn from (seed, epoch, class) streams, so the same
    seed and epoch always produce the same shuffle.
    """
    epoch = cursor.epoch + 1
    perms = tuple(
        stream(seed, DOMAIN_CLASS_SHUFFLE, epoch, cid).permutation(len(p))
        for cid, p in enumerate(cursor.perms)
    )
    return CyclicCursor(tau=cursor.tau, perms=perms, epoch=epoch)


def next_batch(
    cursor: CyclicCursor, plan: BatchPlan, ds
) -> tuple[Batch, CyclicCursor]:
    """Emit one batch of (class_id, sample_index) pairs and the advanced cursor.

    Class i contributes perm_i[(tau_i + w) mod |J_i|] for w in
    [0, counts_i), in class-major order; tau_i then advances by counts_i
    modulo |J_i|.
    """
    if len(plan.counts) != len(cursor.perms):
        raise InvalidSize("plan and cursor class counts disagree")
    if ds is not None and list(ds.class_counts) != [len(p) for p in cursor.perms]:
        raise InvalidSize("cursor was built for different class sizes")
    tau = cursor.tau.copy()
    batch: Batch = []
    for cid, count in enumerate(plan.counts):
        count = int(count)
        if count == 0:
            continue
        n = len(cursor.perms[cid])
        positions = (tau[cid] + np.arange(count, dtype=np.int64)) % n
        for j in cursor.perms[cid][positions]:
            batch.append((cid, int(j)))
        tau[cid] = (tau[cid] + count) % n
    return batch, CyclicCursor(tau=tau, perms=cursor.perms, epoch=cursor.epoch)
