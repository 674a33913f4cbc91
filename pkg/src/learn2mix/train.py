"""The six training strategies and their shared metrics machinery.

learn2mix and classical share one engine: class-stratified cyclic batches
whose per-class counts come from the mixing vector alpha, one optimizer
step per batch, class-wise losses recomputed at the end of each epoch,
then one mixing update. classical is literally that engine with gamma
forced to 0, which is what makes the strategy-equivalence guarantee exact.
focal and smote reuse the same engine (fixed proportions, different loss /
different dataset); importance sampling and curriculum compose batches
from the pooled dataset instead.

Metrics CSVs are byte-deterministic by default: the elapsed_s column is
left empty unless the writer is asked for wall-clock values, because two
identical runs can never agree on timings. Wall-clock totals still live in
each run's manifest.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ._streams import (
    DOMAIN_POOLED_SHUFFLE,
    DOMAIN_SMOTE,
    DOMAIN_SUBSET_DRAW,
    DOMAIN_WARMUP_SHUFFLE,
    stream,
)
from .data import ClassPartitionedDataset, from_class_arrays
from .errors import ClassTooSmall, InvalidSize
from .mix import BatchPlan, ClassLossVector, MixingState, allocate_counts, update_mixing
from .nn import (
    AdamState,
    DenseNet,
    LossKind,
    adam_step,
    forward,
    loss_and_grad,
    per_sample_losses,
    sgd_step,
    true_class_probabilities,
)
from .sampler import begin_epoch, new_cursor, next_batch

STRATEGIES = ("learn2mix", "classical", "focal", "smote", "is", "curriculum")

CURRICULUM_STARTING_FRACTION = 0.5
CURRICULUM_GROWTH = 1.2
CURRICULUM_STEP_LENGTH = 10
WARMUP_PLATEAU_WINDOW = 5
WARMUP_PLATEAU_TOL = 1e-4
WARMUP_MAX_EPOCHS = 100
SMOTE_NEIGHBORS = 5


@dataclass(frozen=True)
class TrainConfig:
    strategy: str
    epochs: int
    batch_size: int
    learning_rate: float
    mixing_rate: float = 0.0
    seed: int = 0
    loss: str = "mse"
    eval_every: int = 1
    optimizer: str = "adam"
    single_step_per_epoch: bool = False
    focal_focus: float = 2.0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidSize(f"unknown strategy {self.strategy!r}")
        if self.epochs < 1 or self.batch_size < 1 or self.eval_every < 1:
            raise InvalidSize("epochs, batch_size and eval_every must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidSize("learning_rate must be > 0")
        if not 0.0 <= self.mixing_rate < 1.0:
            raise InvalidSize("mixing_rate must lie in [0, 1)")
        if self.loss not in ("mse", "cross_entropy"):
            raise InvalidSize(f"loss must be mse or cross_entropy, got {self.loss!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise InvalidSize(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        if self.seed < 0:
            raise InvalidSize("seed must be nonnegative")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    elapsed_s: float
    train_loss: float
    class_losses: np.ndarray
    alpha: np.ndarray
    test_loss: float | None = None
    accuracy: float | None = None
    worst_class_accuracy: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.train_loss) or self.train_loss < 0:
            raise InvalidSize(f"train loss must be finite and >= 0, got {self.train_loss}")
        cl = np.asarray(self.class_losses, dtype=np.float64)
        if not np.isfinite(cl).all() or (cl < 0).any():
            raise InvalidSize("class losses must be finite and >= 0")
        object.__setattr__(self, "class_losses", cl)
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64))


@dataclass(frozen=True)
class EvalResult:
    loss: float
    class_losses: np.ndarray
    accuracy: float | None
    class_accuracies: np.ndarray | None
    worst_class_accuracy: float | None


def _base_kind(cfg: TrainConfig) -> LossKind:
    return LossKind.mse() if cfg.loss == "mse" else LossKind.cross_entropy()


def _require_classification(ds: ClassPartitionedDataset, net: DenseNet, what: str):
    if ds.label_dim != ds.num_classes or net.output_dim != ds.num_classes:
        raise InvalidSize(f"{what} requires one-hot labels and a {ds.num_classes}-way head")


def evaluate(net: DenseNet, test_ds: ClassPartitionedDataset, kind: LossKind) -> EvalResult:
    """Full test pass: pooled mean loss, per-class mean losses, and for
    classification (label_dim > 1) argmax accuracy plus worst-class accuracy.

    Under the focal kind, losses are its cross-entropy core so values stay
    comparable across strategies. Argmax ties resolve to the lowest class
    index.
    """
    X, Y, ids = test_ds.pooled()
    k = test_ds.num_classes
    losses = per_sample_losses(net, (X, Y), kind)
    counts = np.bincount(ids, minlength=k).astype(np.float64)
    class_losses = np.bincount(ids, weights=losses, minlength=k) / counts
    if test_ds.label_dim == 1:
        return EvalResult(float(losses.mean()), class_losses, None, None, None)
    pred = np.argmax(forward(net, X), axis=1)
    truth = np.argmax(Y, axis=1)
    hit = (pred == truth).astype(np.float64)
    class_acc = np.bincount(ids, weights=hit, minlength=k) / counts
    return EvalResult(
        float(losses.mean()),
        class_losses,
        float(hit.mean()),
        class_acc,
        float(class_acc.min()),
    )


def compute_classwise_losses(net, epoch_batches, kind: LossKind, k: int) -> ClassLossVector:
    """Per-class losses for one epoch: for each class, the mean over batches
    of its within-batch mean per-sample loss, restricted to batches where
    the class appears (valid_mask marks classes seen at least once).

    epoch_batches is the recorded list of (X, Y, class_ids) triples.
    """
    sums = np.zeros(k)
    seen = np.zeros(k, dtype=np.int64)
    for X, Y, ids in epoch_batches:
        losses = per_sample_losses(net, (X, Y), kind)
        counts = np.bincount(ids, minlength=k).astype(np.float64)
        present = counts > 0
        batch_means = np.zeros(k)
        np.add.at(batch_means, ids, losses)
        batch_means[present] /= counts[present]
        sums[present] += batch_means[present]
        seen[present] += 1
    mask = seen > 0
    out = np.zeros(k)
    out[mask] = sums[mask] / seen[mask]
    return ClassLossVector(out, mask)


class _Stepper:
    """Holds the optimizer state so strategy loops stay readable."""

    def __init__(self, net: DenseNet, cfg: TrainConfig):
        self.net = net
        self.cfg = cfg
        self.adam = AdamState.init(net, cfg.learning_rate) if cfg.optimizer == "adam" else None

    def step(self, grads):
        if self.adam is not None:
            self.net, self.adam = adam_step(self.net, grads, self.adam)
        else:
            self.net = sgd_step(self.net, grads, self.cfg.learning_rate)


def _mean_grads(grad_list):
    P = len(grad_list)
    return [
        (
            sum(g[li][0] for g in grad_list) / P,
            sum(g[li][1] for g in grad_list) / P,
        )
        for li in range(len(grad_list[0]))
    ]


def _epoch_row(
    epoch: int,
    t0: float,
    train_loss: float,
    class_losses: np.ndarray,
    alpha: np.ndarray,
    net: DenseNet,
    test_ds: ClassPartitionedDataset | None,
    kind: LossKind,
    cfg: TrainConfig,
) -> EpochMetrics:
    row = EpochMetrics(
        epoch=epoch,
        elapsed_s=time.perf_counter() - t0,
        train_loss=train_loss,
        class_losses=class_losses,
        alpha=alpha,
    )
    if test_ds is not None and (epoch % cfg.eval_every == 0 or epoch == cfg.epochs):
        ev = evaluate(net, test_ds, kind)
        row = replace(
            row,
            test_loss=ev.loss,
            accuracy=ev.accuracy,
            worst_class_accuracy=ev.worst_class_accuracy,
        )
    return row


def _gather(ds: ClassPartitionedDataset, pairs, counts):
    """Materialize a class-major batch: features, labels, class ids."""
    idx = np.asarray([j for _, j in pairs], dtype=np.int64)
    xs, ys = [], []
    start = 0
    for cid, c in enumerate(counts):
        c = int(c)
        if c == 0:
            continue
        sel = idx[start : start + c]
        xs.append(ds.classes[cid].features[sel])
        ys.append(ds.classes[cid].labels[sel])
        start += c
    ids = np.repeat(np.arange(len(counts)), counts)
    return np.concatenate(xs), np.concatenate(ys), ids


def _train_stratified(
    ds: ClassPartitionedDataset,
    test_ds: ClassPartitionedDataset | None,
    net: DenseNet,
    cfg: TrainConfig,
    kind: LossKind,
    gamma: float,
    batches_per_epoch: int | None = None,
) -> tuple[DenseNet, list[EpochMetrics]]:
    k = ds.num_classes
    P = batches_per_epoch if batches_per_epoch is not None else ds.n_total // cfg.batch_size
    if P < 1:
        raise InvalidSize(
            f"batch size {cfg.batch_size} exceeds dataset size {ds.n_total}: zero batches per epoch"
        )
    state = MixingState(ds.fixed_proportions, gamma)
    cursor = new_cursor(ds.class_counts)
    stepper = _Stepper(net, cfg)
    carried = np.zeros(k)
    metrics: list[EpochMetrics] = []
    t0 = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        cursor = begin_epoch(cursor, cfg.seed)
        plan = allocate_counts(state.alpha, cfg.batch_size)
        epoch_batches = []
        batch_losses = []
        pending = [] if cfg.single_step_per_epoch else None
        for _ in range(P):
            pairs, cursor = next_batch(cursor, plan, ds)
            X, Y, ids = _gather(ds, pairs, plan.counts)
            loss, grads = loss_and_grad(stepper.net, (X, Y), kind)
            batch_losses.append(loss)
            epoch_batches.append((X, Y, ids))
            if pending is None:
                stepper.step(grads)
            else:
                pending.append(grads)
        if pending is not None:
            stepper.step(_mean_grads(pending))
        observed = compute_classwise_losses(stepper.net, epoch_batches, kind, k)
        carried = np.where(observed.valid_mask, observed.losses, carried)
        alpha_used = state.alpha
        state = update_mixing(state, ClassLossVector(carried, observed.valid_mask))
        metrics.append(
            _epoch_row(
                epoch, t0, float(np.mean(batch_losses)), carried, alpha_used,
                stepper.net, test_ds, kind, cfg,
            )
        )
    return stepper.net, metrics


def train_learn2mix(ds, test_ds, net, cfg: TrainConfig):
    """Adaptive-mixing training: per-class batch shares follow the class-wise
    loss distribution at rate cfg.mixing_rate."""
    if cfg.strategy != "learn2mix":
        raise InvalidSize(f"config strategy is {cfg.strategy!r}, expected learn2mix")
    return _train_stratified(ds, test_ds, net, cfg, _base_kind(cfg), cfg.mixing_rate)


def train_classical(ds, test_ds, net, cfg: TrainConfig):
    """Fixed-proportion training: the adaptive engine with mixing rate 0."""
    if cfg.strategy != "classical":
        raise InvalidSize(f"config strategy is {cfg.strategy!r}, expected classical")
    return _train_stratified(ds, test_ds, net, cfg, _base_kind(cfg), 0.0)


def focal_weights(ds: ClassPartitionedDataset) -> np.ndarray:
    """Class weights proportional to inverse class counts, scaled to sum k."""
    raw = 1.0 / ds.class_counts
    return raw / raw.sum() * ds.num_classes


def train_focal(ds, test_ds, net, cfg: TrainConfig):
    """Fixed-proportion training under the class-level focal loss, with
    weights from inverse training-class frequencies."""
    if cfg.strategy != "focal":
        raise InvalidSize(f"config strategy is {cfg.strategy!r}, expected focal")
    _require_classification(ds, net, "focal training")
    kind = LossKind.focal(focal_weights(ds), cfg.focal_focus)
    return _train_stratified(ds, test_ds, net, cfg, kind, 0.0)


def _synthesize_class(
    features: np.ndarray, n_new: int, rng: np.random.Generator, n_neighbors: int
) -> np.ndarray:
    n = features.shape[0]
    if n < 2:
        raise ClassTooSmall(0)
    dist = np.linalg.norm(features[:, None, :] - features[None, :, :], axis=2)
    np.fill_diagonal(dist, np.inf)
    nn_count = min(n_neighbors, n - 1)
    neighbors = np.argsort(dist, axis=1, kind="stable")[:, :nn_count]
    base = rng.integers(0, n, size=n_new)
    pick = rng.integers(0, nn_count, size=n_new)
    u = rng.uniform(0.0, 1.0, size=n_new)
    x = features[base]
    x_nn = features[neighbors[base, pick]]
    return x + u[:, None] * (x_nn - x)


def smote_oversample(
    ds: ClassPartitionedDataset, seed: int, n_neighbors: int = SMOTE_NEIGHBORS
) -> ClassPartitionedDataset:
    """Pad every class up to the largest class size with synthetic samples.

    Each synthetic point interpolates between a random class member and one
    of its n_neighbors nearest same-class neighbors, so it lies on a
    segment between two real points. A singleton class has no neighbor and
    falls back to duplication. Already-balanced datasets come back as-is.
    """
    target = int(ds.class_counts.max())
    if (ds.class_counts == target).all():
        return ds
    feats, labels = [], []
    for cid, store in enumerate(ds.classes):
        n = len(store)
        if n == target:
            feats.append(store.features)
            labels.append(store.labels)
            continue
        rng = stream(seed, DOMAIN_SMOTE, cid)
        try:
            synth = _synthesize_class(store.features, target - n, rng, n_neighbors)
        except ClassTooSmall:
            synth = np.repeat(store.features, target - n, axis=0)[: target - n]
        feats.append(np.concatenate([store.features, synth]))
        labels.append(
            np.concatenate([store.labels, np.repeat(store.labels[:1], target - n, axis=0)])
        )
    return from_class_arrays(feats, labels)


def train_smote(ds, test_ds, net, cfg: TrainConfig):
    """One-time synthetic oversampling to balance, then fixed-proportion
    training with the original dataset's batches-per-epoch count."""
    if cfg.strategy != "smote":
        raise InvalidSize(f"config strategy is {cfg.strategy!r}, expected smote")
    _require_classification(ds, net, "smote training")
    balanced = smote_oversample(ds, cfg.seed)
    P = ds.n_total // cfg.batch_size
    return _train_stratified(
        balanced, test_ds, net, cfg, _base_kind(cfg), 0.0, batches_per_epoch=P
    )


def proportional_subset(
    rng: np.random.Generator, weights: np.ndarray, size: int
) -> np.ndarray:
    """Sample `size` distinct indices, each draw proportional to the weights
    of the remaining candidates (sequential renormalization). When the
    remaining weight mass is zero the draw continues uniformly.
    """
    if size > weights.shape[0]:
        raise InvalidSize("subset size exceeds population")
    w = np.clip(np.asarray(weights, dtype=np.float64), 0.0, None)
    avail = np.ones(w.shape[0], dtype=bool)
    chosen = np.empty(size, dtype=np.int64)
    for i in range(size):
        total = w[avail].sum()
        pool = np.flatnonzero(avail)
        if total <= 0.0:
            j = pool[rng.integers(pool.shape[0])]
        else:
            probs = w[pool] / total
            j = pool[rng.choice(pool.shape[0], p=probs)]
        chosen[i] = j
        avail[j] = False
    return chosen


def train_is(ds, test_ds, net, cfg: TrainConfig):
    """Importance sampling: per uniform batch of size M, keep the half with
    loss-proportional (without replacement) selection and step on it."""
    if cfg.strategy != "is":
        raise InvalidSize(f"config strategy is {cfg.strategy!r}, expected is")
    if cfg.batch_size < 2:
        raise InvalidSize("importance sampling needs batch_size >= 2")
    kind = _base_kind(cfg)
    X, Y, ids = ds.pooled()
    N, M = ds.n_total, cfg.batch_size
    P = N // M
    if P < 1:
        raise InvalidSize(f"batch size {M} exceeds dataset size {N}")
    b = M // 2
    k = ds.num_classes
    alpha_static = ds.fixed_proportions
    stepper = _Stepper(net, cfg)
    carried = np.zeros(k)
    metrics: list[EpochMetrics] = []
    t0 = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        order = stream(cfg.seed, DOMAIN_POOLED_SHUFFLE, epoch).permutation(N)
        epoch_batches = []
        batch_losses = []
        for p in range(P):
            sel = order[p * M : (p + 1) * M]
            losses = per_sample_losses(stepper.net, (X[sel], Y[sel]), kind)
            total = losses.sum()
            rng = stream(cfg.seed, DOMAIN_SUBSET_DRAW, epoch, p)
            if total <= 0.0:
                subset = rng.choice(M, size=b, replace=False)
            else:
                subset = proportional_subset(rng, losses / total, b)
            keep = sel[subset]
            loss, grads = loss_and_grad(stepper.net, (X[keep], Y[keep]), kind)
            stepper.step(grads)
            batch_losses.append(loss)
            epoch_batches.append((X[sel], Y[sel], ids[sel]))
        observed = compute_classwise_losses(stepper.net, epoch_batches, kind, k)
        carried = np.where(observed.valid_mask, observed.losses, carried)
        metrics.append(
            _epoch_row(
                epoch, t0, float(np.mean(batch_losses)), carried, alpha_static,
                stepper.net, test_ds, kind, cfg,
            )
        )
    return stepper.net, metrics


def curriculum_fraction(
    t: int,
    starting: float = CURRICULUM_STARTING_FRACTION,
    growth: float = CURRICULUM_GROWTH,
    step_length: int = CURRICULUM_STEP_LENGTH,
) -> float:
    """Pacing schedule: min(starting * growth**(t // step_length), 1)."""
    return min(starting * growth ** (t // step_length), 1.0)


def _warmup(net: DenseNet, X, Y, cfg: TrainConfig, kind: LossKind) -> DenseNet:
    """Train a scoring copy on uniform batches until the train loss plateaus
    (relative improvement < 1e-4 over 5 epochs) or the epoch cap."""
    N = X.shape[0]
    P = N // cfg.batch_size
    stepper = _Stepper(net, cfg)
    history: list[float] = []
    for epoch in range(1, WARMUP_MAX_EPOCHS + 1):
        order = stream(cfg.seed, DOMAIN_WARMUP_SHUFFLE, epoch).permutation(N)
        losses = []
        for p in range(P):
            sel = order[p * cfg.batch_size : (p + 1) * cfg.batch_size]
            loss, grads = loss_and_grad(stepper.net, (X[sel], Y[sel]), kind)
            stepper.step(grads)
            losses.append(loss)
        history.append(float(np.mean(losses)))
        if len(history) > WARMUP_PLATEAU_WINDOW:
            prev = history[-1 - WARMUP_PLATEAU_WINDOW]
            if (prev - history[-1]) / max(abs(prev), 1e-12) < WARMUP_PLATEAU_TOL:
                break
    return stepper.net


def curriculum_order(scores: np.ndarray) -> np.ndarray:
    """Easiest-first sample ordering: ascending score, ties by index."""
    return np.argsort(scores, kind="stable")


def train_curriculum(ds, test_ds, net, cfg: TrainConfig):
    """Self-taught curriculum: a warmed-up copy scores every sample by
    1 - (confidence in its true label); the main model restarts from the
    initial parameters and trains each epoch on the easiest frac(t) of the
    data. Warm-up and scoring are excluded from reported elapsed time."""
    if cfg.strategy != "curriculum":
        raise InvalidSize(f"config strategy is {cfg.strategy!r}, expected curriculum")
    _require_classification(ds, net, "curriculum training")
    kind = _base_kind(cfg)
    X, Y, ids = ds.pooled()
    N, M = ds.n_total, cfg.batch_size
    if int(curriculum_fraction(0) * N) < M:
        raise InvalidSize(
            f"starting subset {int(curriculum_fraction(0) * N)} is smaller than one batch"
        )
    warmed = _warmup(net, X, Y, cfg, kind)
    scores = 1.0 - true_class_probabilities(warmed, X, Y)
    order = curriculum_order(scores)
    k = ds.num_classes
    alpha_static = ds.fixed_proportions
    stepper = _Stepper(net, cfg)
    carried = np.zeros(k)
    metrics: list[EpochMetrics] = []
    t0 = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        n_t = int(curriculum_fraction(epoch - 1) * N)
        subset = order[:n_t]
        perm = stream(cfg.seed, DOMAIN_POOLED_SHUFFLE, epoch).permutation(n_t)
        shuffled = subset[perm]
        P_t = n_t // M
        epoch_batches = []
        batch_losses = []
        for p in range(P_t):
            sel = shuffled[p * M : (p + 1) * M]
            loss, grads = loss_and_grad(stepper.net, (X[sel], Y[sel]), kind)
            stepper.step(grads)
            batch_losses.append(loss)
            epoch_batches.append((X[sel], Y[sel], ids[sel]))
        observed = compute_classwise_losses(stepper.net, epoch_batches, kind, k)
        carried = np.where(observed.valid_mask, observed.losses, carried)
        metrics.append(
            _epoch_row(
                epoch, t0, float(np.mean(batch_losses)), carried, alpha_static,
                stepper.net, test_ds, kind, cfg,
            )
        )
    return stepper.net, metrics


_DISPATCH: dict[str, Callable] = {
    "learn2mix": train_learn2mix,
    "classical": train_classical,
    "focal": train_focal,
    "smote": train_smote,
    "is": train_is,
    "curriculum": train_curriculum,
}


def train(ds, test_ds, net, cfg: TrainConfig):
    """Dispatch to the strategy named by cfg.strategy."""
    return _DISPATCH[cfg.strategy](ds, test_ds, net, cfg)


METRIC_BASE_COLUMNS = ("epoch", "elapsed_s", "train_loss", "test_loss", "accuracy", "worst_class_acc")


def metrics_header(k: int) -> list[str]:
    return (
        list(METRIC_BASE_COLUMNS)
        + [f"loss_c{i}" for i in range(k)]
        + [f"alpha_{i}" for i in range(k)]
    )


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def write_metrics_csv(
    metrics: Sequence[EpochMetrics], path: str | Path, include_wall_clock: bool = False
) -> None:
    """Write one run's per-epoch metrics.

    By default the elapsed_s column is left empty so that equal-seed runs
    produce byte-identical files; pass include_wall_clock=True for human
    consumption when reproducibility of the file does not matter.
    """
    k = len(metrics[0].class_losses)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(metrics_header(k))
        for m in metrics:
            row = [
                str(m.epoch),
                _fmt(m.elapsed_s) if include_wall_clock else "",
                _fmt(m.train_loss),
                _fmt(m.test_loss),
                _fmt(m.accuracy),
                _fmt(m.worst_class_accuracy),
            ]
            row += [_fmt(v) for v in m.class_losses]
            row += [_fmt(v) for v in m.alpha]
            writer.writerow(row)


def read_metrics_csv(path: str | Path) -> list[EpochMetrics]:
    """Read a metrics CSV back into EpochMetrics rows."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        k = sum(1 for c in header if c.startswith("loss_c"))
        out = []
        for row in reader:
            vals = dict(zip(header, row))
            opt = lambda key: float(vals[key]) if vals[key] else None
            out.append(
                EpochMetrics(
                    epoch=int(vals["epoch"]),
                    elapsed_s=opt("elapsed_s") or 0.0,
                    train_loss=float(vals["train_loss"]),
                    class_losses=np.array([float(vals[f"loss_c{i}"]) for i in range(k)]),
                    alpha=np.array([float(vals[f"alpha_{i}"]) for i in range(k)]),
                    test_loss=opt("test_loss"),
                    accuracy=opt("accuracy"),
                    worst_class_accuracy=opt("worst_class_acc"),
                )
            )
    return out
