"""Adaptive mixing parameters: the simplex vector alpha driving batch composition.

Once per epoch the trainer feeds the class-wise loss vector through
update_mixing, which moves alpha a fraction gamma of the way toward the
normalized losses. gamma=0 leaves alpha fixed and recovers classical
training. allocate_counts converts alpha into integer per-class counts for
one batch of size M.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSize, NegativeLoss, NonFiniteLoss, ZeroTotalLoss

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class ClassLossVector:
    """Per-class empirical losses for one epoch.

    valid_mask marks classes actually observed this epoch; entries for
    unobserved classes are carried forward by the caller and stay part of
    the vector so the mixing update always sees all k classes.
    """

    losses: np.ndarray
    valid_mask: np.ndarray = None

    def __post_init__(self):
        losses = np.asarray(self.losses, dtype=np.float64)
        if not np.isfinite(losses).all():
            raise NonFiniteLoss(f"class losses contain non-finite entries: {losses}")
        mask = self.valid_mask
        mask = np.ones(losses.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if mask.shape != losses.shape:
            raise InvalidSize("valid_mask shape must match losses")
        object.__setattr__(self, "losses", losses)
        object.__setattr__(self, "valid_mask", mask)


@dataclass(frozen=True)
class MixingState:
    """alpha at epoch t plus the mixing rate gamma."""

    alpha: np.ndarray
    gamma: float
    t: int = 0

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        if (alpha < 0).any():
            raise InvalidSize("alpha components must be nonnegative")
        if abs(alpha.sum() - 1.0) > SIMPLEX_TOL:
            raise InvalidSize(f"alpha must sum to 1 within {SIMPLEX_TOL}, got {alpha.sum()!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidSize(f"gamma must lie in [0, 1), got {self.gamma}")
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True)
class BatchPlan:
    """Integer per-class sample counts for one batch."""

    counts: np.ndarray
    batch_size: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if (counts < 0).any():
            raise InvalidSize("batch counts must be nonnegative")
        if counts.sum() != self.batch_size:
            raise InvalidSize(
                f"counts sum to {counts.sum()}, expected batch_size {self.batch_size}"
            )
        object.__setattr__(self, "counts", counts)


def _loss_array(lv) -> np.ndarray:
    losses = lv.losses if isinstance(lv, ClassLossVector) else np.asarray(lv, dtype=np.float64)
    if (losses < 0).any():
        raise NegativeLoss(f"class losses must be nonnegative, got {losses}")
    return losses


def normalize_losses(lv) -> np.ndarray | None:
    """Return losses / sum(losses), or None when the total is zero.

    None is the no-update sentinel: a zero-total epoch means training has
    converged on every class and update_mixing leaves alpha untouched.
    """
    losses = _loss_array(lv)
    total = losses.sum()
    if total == 0.0:
        return None
    return losses / total


def update_mixing(state: MixingState, lv) -> MixingState:
    """One mixing update: alpha <- alpha + gamma * (normalized losses - alpha).

    The result is renormalized exactly onto the simplex by absorbing the
    (sub-1e-12) floating drift into the largest component. The epoch
    counter t advances even on a skipped (zero-total-loss) update.
    """
    normalized = normalize_losses(lv)
    if normalized is None or state.gamma == 0.0:
        # gamma=0 must return alpha bit-identically, so skip the arithmetic:
        # drift absorption would otherwise move an ulp between components.
        return MixingState(state.alpha, state.gamma, state.t + 1)
    alpha = state.alpha + state.gamma * (normalized - state.alpha)
    drift = 1.0 - alpha.sum()
    if drift != 0.0:
        alpha = alpha.copy()
        alpha[int(np.argmax(alpha))] += drift
    return MixingState(alpha, state.gamma, state.t + 1)


def allocate_counts(alpha: np.ndarray, M: int) -> BatchPlan:
    """Apportion a batch of size M across classes by largest remainder.

    counts_i = floor(alpha_i * M), then +1 to the largest fractional
    remainders until the counts sum to M; remainder ties go to the lower
    class index. Guarantees |counts_i - alpha_i*M| < 1.
    """
    if M < 1:
        raise InvalidSize(f"batch size must be >= 1, got {M}")
    alpha = np.asarray(alpha, dtype=np.float64)
    target = alpha * M
    counts = np.floor(target).astype(np.int64)
    deficit = int(M - counts.sum())
    if deficit:
        order = np.argsort(-(target - counts), kind="stable")
        counts[order[:deficit]] += 1
    return BatchPlan(counts, M)


def mixing_fixed_point(optimal_losses) -> np.ndarray:
    """The stationary alpha: losses at the optimum normalized to the simplex."""
    normalized = normalize_losses(optimal_losses)
    if normalized is None:
        raise ZeroTotalLoss("cannot normalize an all-zero loss vector")
    return normalized
