"""Watching the mixing vector move: from native proportions to loss shares.

Every epoch, learn2mix computes the per-class training losses L_i and
nudges the batch-composition vector alpha a step of size gamma toward the
normalized loss distribution:

    alpha <- alpha + gamma * (L / sum(L) - alpha)

Two consequences are visible in this demo. On a 3-class Gaussian-blobs
problem with a 900/90/10 train split, the minority classes start with 9%
and 1% of every batch; because their losses stay high while the majority
class converges, their share climbs steadily. And because the update is a
convex pull toward a point on the simplex, alpha stays a valid probability
vector forever - no clipping, no renormalization tricks.

The batch plan below shows the integer per-class sample counts actually
drawn from a 100-sample batch (largest-remainder apportionment of
alpha * 100), which is how the continuous alpha becomes a concrete batch.

Usage: python3 demos/mixing_dynamics.py
"""

import sys
from pathlib import Path

import numpy as np

from learn2mix.data import make_gaussian_blobs
from learn2mix.mix import allocate_counts
from learn2mix.nn import classification_net
from learn2mix.train import TrainConfig, train

OUT_DIR = Path(__file__).resolve().parent / "output"


def main():
    print(__doc__)
    seed = 0
    counts = [900, 90, 10]
    train_ds = make_gaussian_blobs(seed, 3, counts, 3, 2.0, split="train")
    test_ds = make_gaussian_blobs(seed, 3, [500] * 3, 3, 2.0, split="test")

    net = classification_net(3, 3, seed, 64)
    cfg = TrainConfig(strategy="learn2mix", epochs=40, batch_size=100,
                      learning_rate=1e-3, mixing_rate=0.05, seed=seed,
                      loss="cross_entropy", eval_every=5)
    _, metrics = train(train_ds, test_ds, net, cfg)

    print(f"{'epoch':>6} {'alpha':>24} {'batch plan':>16} {'class losses':>26}")
    for m in metrics:
        if m.epoch % 5 and m.epoch != 1:
            continue
        plan = allocate_counts(m.alpha, 100)
        print(f"{m.epoch:>6} {np.array2string(np.round(m.alpha, 3)):>24} "
              f"{np.array2string(plan.counts):>16} "
              f"{np.array2string(np.round(m.class_losses, 3)):>26}")

    final = metrics[-1]
    print(f"\nstarted from the native proportions {np.round(train_ds.fixed_proportions, 3)}")
    print(f"ended at {np.round(final.alpha, 3)} - batch composition now tracks "
          "where the remaining loss lives.")
    ev = [m for m in metrics if m.worst_class_accuracy is not None][-1]
    print(f"worst-class test accuracy at the end: {ev.worst_class_accuracy:.3f}")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return 0
    OUT_DIR.mkdir(exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    epochs = [m.epoch for m in metrics]
    traj = np.array([m.alpha for m in metrics])
    for i, native in enumerate(train_ds.fixed_proportions):
        line, = ax.plot(epochs, traj[:, i], label=f"class {i} (native {native:.2f})")
        ax.axhline(native, color=line.get_color(), linestyle=":", linewidth=0.8)
    ax.set_xlabel("epoch")
    ax.set_ylabel("batch share alpha_i")
    ax.legend()
    fig.tight_layout()
    out = OUT_DIR / "mixing_dynamics.png"
    fig.savefig(out, dpi=120)
    print(f"\nwrote {out} (dotted lines mark the native proportions)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
