"""Command-line interface: dataset generation, training grids, theory
certification, plotting, and summary tables.

Subcommands
-----------
gen-data       write a generated dataset to train.csv / test.csv
train          run a strategy x seed grid, write per-run metrics CSVs,
               a manifest, and a checkpoint summary table
verify-theory  run the numerical certification suite, emit a JSON report
plot           render test-loss (or mixing-weight) trajectories to an image
summarize      recompute the checkpoint summary from raw metrics CSVs

Exit codes: 0 success, 1 runtime failure, 2 usage error.

The default output root is the LEARN2MIX_OUT environment variable, falling
back to ./runs. A JSON config file may supply any train option; explicit
command-line flags override config values.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import re
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    ClassPartitionedDataset,
    CsvSchema,
    ImbalanceSpec,
    apply_imbalance,
    from_class_arrays,
    load_csv,
    make_gaussian_blobs,
    make_mean_estimation,
    write_dataset_csv,
)
from .errors import InvalidSize, Learn2MixError, MissingColumn
from .nn import classification_net, regression_net, save_checkpoint
from .theory import (
    QuadraticInstance,
    contraction_factor,
    corollary_sweep,
    prop2_sweep,
    report_to_dict,
    run_prop1,
)
from .train import (
    STRATEGIES,
    TrainConfig,
    read_metrics_csv,
    train,
    write_metrics_csv,
)

OUTPUT_ROOT_ENV = "LEARN2MIX_OUT"

TASKS = ("mean-estimation", "blobs", "csv")

# Training options that a JSON config file may supply. Flags override these.
TRAIN_CONFIG_KEYS = {
    "strategies": ["learn2mix", "classical"],
    "seeds": 1,
    "epochs": None,  # per-task default applied later
    "batch_size": None,
    "learning_rate": None,
    "mixing_rate": None,
    "loss": None,
    "optimizer": "adam",
    "eval_every": 1,
    "focal_focus": 2.0,
    "hidden": 64,
    "jobs": 1,
    "save_model": False,
    "wall_clock": False,
    # dataset parameters
    "sizes": [1000, 1000, 800, 200],
    "test_per_class": 1000,
    "classes": 3,
    "counts": [900, 90, 10],
    "dim": 2,
    "separation": 3.0,
    "test_counts": None,
    "imbalance": None,
    "train_csv": None,
    "test_csv": None,
    "label_column": None,
    "class_column": None,
    "feature_columns": None,
    "delimiter": ",",
}

# Defaults that depend on the task (applied after config-file resolution).
TASK_DEFAULTS = {
    "mean-estimation": {
        "epochs": 500,
        "batch_size": 500,
        "learning_rate": 5e-5,
        "mixing_rate": 0.01,
        "loss": "mse",
    },
    "blobs": {
        "epochs": 50,
        "batch_size": 100,
        "learning_rate": 1e-3,
        "mixing_rate": 0.05,
        "loss": "cross_entropy",
    },
    "csv": {
        "epochs": 100,
        "batch_size": 100,
        "learning_rate": 1e-3,
        "mixing_rate": 0.01,
        "loss": "mse",
    },
}


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def _git_commit() -> str | None:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=Path(__file__).resolve().parent,
        )
    except OSError:
        return None
    return out.stdout.strip() if out.returncode == 0 else None


# ---------------------------------------------------------------------------
# dataset construction shared by gen-data and train


def build_datasets(cfg: dict) -> tuple[ClassPartitionedDataset, ClassPartitionedDataset]:
    """Materialize (train, test) datasets for a resolved config."""
    task, seed = cfg["task"], cfg["seed"]
    if task == "mean-estimation":
        return make_mean_estimation(seed, cfg["sizes"], cfg["test_per_class"])
    if task == "blobs":
        k, d, sep = cfg["classes"], cfg["dim"], cfg["separation"]
        counts = cfg["counts"]
        if len(counts) != k:
            raise InvalidSize(f"counts must have {k} entries, got {len(counts)}")
        test_counts = cfg["test_counts"] or [max(counts)] * k
        train_ds = make_gaussian_blobs(seed, k, counts, d, sep, split="train")
        test_ds = make_gaussian_blobs(seed, k, test_counts, d, sep, split="test")
        if cfg["imbalance"]:
            train_ds = apply_imbalance(train_ds, ImbalanceSpec(cfg["imbalance"]), seed)
        return train_ds, test_ds
    if task == "csv":
        for key in ("train_csv", "test_csv", "label_column", "class_column"):
            if not cfg[key]:
                raise InvalidSize(f"task csv requires --{key.replace('_', '-')}")
        schema = CsvSchema(
            delimiter=cfg["delimiter"], feature_columns=cfg["feature_columns"]
        )
        train_ds = load_csv(cfg["train_csv"], cfg["label_column"], cfg["class_column"], schema)
        test_ds = load_csv(cfg["test_csv"], cfg["label_column"], cfg["class_column"], schema)
        if cfg.get("loss") == "cross_entropy" and train_ds.label_dim == 1:
            # Classification targets are the class indicators themselves;
            # CSV files carry the class index, so rebuild one-hot labels.
            train_ds = _one_hot_labels(train_ds)
            test_ds = _one_hot_labels(test_ds)
        return train_ds, test_ds
    raise InvalidSize(f"unknown task {task!r}")


def _one_hot_labels(ds: ClassPartitionedDataset) -> ClassPartitionedDataset:
    eye = np.eye(ds.num_classes, dtype=np.float64)
    feats = [store.features for store in ds.classes]
    labels = [
        np.tile(eye[i], (store.features.shape[0], 1))
        for i, store in enumerate(ds.classes)
    ]
    return from_class_arrays(feats, labels)


def _make_net(cfg: dict, ds: ClassPartitionedDataset, seed: int):
    if cfg["loss"] == "mse" and ds.label_dim == 1:
        return regression_net(ds.feature_dim, seed, cfg["hidden"])
    return classification_net(ds.feature_dim, ds.num_classes, seed, cfg["hidden"])


# ---------------------------------------------------------------------------
# train subcommand


def resolve_train_config(args: argparse.Namespace) -> dict:
    """Merge builtin defaults, the JSON config file, and explicit flags.

    Precedence (lowest to highest): builtin defaults -> per-task defaults
    -> config file -> command-line flags.
    """
    resolved = dict(TRAIN_CONFIG_KEYS)
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise InvalidSize("config file must contain a JSON object")
        unknown = set(loaded) - set(TRAIN_CONFIG_KEYS) - {"task"}
        if unknown:
            raise InvalidSize(f"unknown config keys: {sorted(unknown)}")
        resolved.update(loaded)
    task = args.task or resolved.get("task")
    if task not in TASKS:
        raise InvalidSize(f"task must be one of {TASKS}, got {task!r}")
    resolved["task"] = task
    for key, value in vars(args).items():
        if key in TRAIN_CONFIG_KEYS and value is not None:
            resolved[key] = value
    for key, value in TASK_DEFAULTS[task].items():
        if resolved[key] is None:
            resolved[key] = value
    if resolved["seeds"] < 1:
        raise InvalidSize("seeds must be >= 1")
    for strategy in resolved["strategies"]:
        if strategy not in STRATEGIES:
            raise InvalidSize(f"unknown strategy {strategy!r}")
    return resolved


def _cell_name(strategy: str, seed: int) -> str:
    return f"{strategy}_seed{seed}"


def run_cell(cfg: dict, strategy: str, seed: int, out_dir: Path) -> dict:
    """Train one (strategy, seed) grid cell and write its metrics CSV."""
    cell_cfg = dict(cfg, seed=seed)
    train_ds, test_ds = build_datasets(cell_cfg)
    net = _make_net(cfg, train_ds, seed)
    mixing = cfg["mixing_rate"] if strategy == "learn2mix" else 0.0
    tc = TrainConfig(
        strategy=strategy,
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        learning_rate=cfg["learning_rate"],
        mixing_rate=mixing,
        seed=seed,
        loss=cfg["loss"],
        eval_every=cfg["eval_every"],
        optimizer=cfg["optimizer"],
        focal_focus=cfg["focal_focus"],
    )
    start = time.perf_counter()
    final_net, metrics = train(train_ds, test_ds, net, tc)
    wall = time.perf_counter() - start
    name = _cell_name(strategy, seed)
    write_metrics_csv(metrics, out_dir / f"{name}.csv", include_wall_clock=cfg["wall_clock"])
    if cfg["save_model"]:
        save_checkpoint(final_net, out_dir / f"{name}.ckpt")
    return {"name": name, "wall_clock_s": wall}


def _run_cell_payload(payload: tuple) -> dict:
    cfg, strategy, seed, out_dir = payload
    return run_cell(cfg, strategy, seed, Path(out_dir))


def checkpoint_epochs(epochs: int) -> list[int]:
    """The three reporting checkpoints: epochs t = 0.25E, 0.5E and E.
    Metrics rows are 1-indexed, so these are 1-indexed epoch numbers."""
    return [max(epochs // 4, 1), max(epochs // 2, 1), epochs]


SUMMARY_HEADER = ["strategy", "n_seeds", "checkpoint", "epoch", "mean", "std"]
CHECKPOINT_TAGS = ("0.25E", "0.5E", "E")


def summarize_runs(csv_paths: list[Path]) -> list[list[str]]:
    """Build the checkpoint summary rows (test loss, mean +/- std) from
    per-run metrics CSVs named <strategy>_seed<k>.csv."""
    pattern = re.compile(r"^(?P<strategy>.+)_seed(?P<seed>\d+)$")
    groups: dict[str, list[Path]] = {}
    for path in sorted(csv_paths):
        match = pattern.match(path.stem)
        strategy = match.group("strategy") if match else path.stem
        groups.setdefault(strategy, []).append(path)
    rows: list[list[str]] = []
    for strategy in sorted(groups):
        per_seed = []
        epochs_idx = None
        for path in groups[strategy]:
            metrics = read_metrics_csv(path)
            by_epoch = {m.epoch: m for m in metrics}
            total = max(by_epoch)
            idx = checkpoint_epochs(total)
            if epochs_idx is None:
                epochs_idx = idx
            elif idx != epochs_idx:
                raise InvalidSize(f"run lengths differ within strategy {strategy!r}")
            vals = []
            for e in idx:
                m = by_epoch.get(e)
                if m is None or m.test_loss is None:
                    raise MissingColumn("test_loss")
                vals.append(m.test_loss)
            per_seed.append(vals)
        arr = np.array(per_seed, dtype=np.float64)
        for j, tag in enumerate(CHECKPOINT_TAGS):
            rows.append(
                [
                    strategy,
                    str(arr.shape[0]),
                    tag,
                    str(epochs_idx[j]),
                    repr(float(arr[:, j].mean())),
                    repr(float(arr[:, j].std())),
                ]
            )
    return rows


def write_summary(rows: list[list[str]], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SUMMARY_HEADER) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _print_summary(rows: list[list[str]]) -> None:
    print(f"{'strategy':<12} {'seeds':>5} {'t':>6} {'epoch':>6} {'mean':>12} {'std':>12}")
    for strategy, n, tag, epoch, mean, std in rows:
        print(f"{strategy:<12} {n:>5} {tag:>6} {epoch:>6} {float(mean):>12.4f} {float(std):>12.4f}")


def cmd_train(args: argparse.Namespace) -> int:
    cfg = resolve_train_config(args)
    out_dir = Path(args.out) if args.out else output_root() / cfg["task"]
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = [(s, seed) for s in cfg["strategies"] for seed in range(cfg["seeds"])]
    start = time.perf_counter()
    results = []
    if cfg["jobs"] > 1:
        payloads = [(cfg, s, seed, str(out_dir)) for s, seed in cells]
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            results = list(pool.map(_run_cell_payload, payloads))
    else:
        for strategy, seed in cells:
            results.append(run_cell(cfg, strategy, seed, out_dir))
    total_wall = time.perf_counter() - start

    csv_paths = [out_dir / f"{r['name']}.csv" for r in results]
    rows = summarize_runs(csv_paths)
    write_summary(rows, out_dir / "summary.csv")
    manifest = {
        "command": "train",
        "package_version": __version__,
        "numpy_version": np.__version__,
        "git_commit": _git_commit(),
        "config": {k: cfg[k] for k in sorted(cfg)},
        "wall_clock_s": {
            "total": total_wall,
            "runs": {r["name"]: r["wall_clock_s"] for r in results},
        },
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(results)} run(s) to {out_dir}")
    _print_summary(rows)
    return 0


# ---------------------------------------------------------------------------
# gen-data subcommand


def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = resolve_train_config(args)
    if cfg["task"] == "csv":
        raise InvalidSize("gen-data generates synthetic tasks; task csv is for loading")
    out_dir = Path(args.out) if args.out else output_root() / f"{cfg['task']}-data"
    out_dir.mkdir(parents=True, exist_ok=True)
    cell_cfg = dict(cfg, seed=args.seed)
    train_ds, test_ds = build_datasets(cell_cfg)
    write_dataset_csv(train_ds, out_dir / "train.csv")
    write_dataset_csv(test_ds, out_dir / "test.csv")
    manifest = {
        "command": "gen-data",
        "package_version": __version__,
        "numpy_version": np.__version__,
        "git_commit": _git_commit(),
        "config": {k: cell_cfg[k] for k in sorted(cell_cfg)},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(
        f"wrote {train_ds.n_total} train / {test_ds.n_total} test samples to {out_dir}"
    )
    return 0


# ---------------------------------------------------------------------------
# verify-theory subcommand

CANONICAL_CURVATURES = (1.0, 2.0, 4.0)
CANONICAL_OFFSETS = (0.2, 0.3, 0.5)
CANONICAL_DIM = 5
CANONICAL_ETA = 0.4
CANONICAL_GAMMA = 0.1


def theory_report(
    steps: int = 10_000,
    draws: int = 10_000,
    instances: int = 1_000,
    seed: int = 0,
) -> dict:
    """Run the full certification suite and return the JSON-ready report."""
    inst = QuadraticInstance(
        curvatures=np.array(CANONICAL_CURVATURES),
        offsets=np.array(CANONICAL_OFFSETS),
        theta_star=np.zeros(CANONICAL_DIM),
        alpha_tilde=np.full(3, 1.0 / 3.0),
    )
    t0 = time.perf_counter()
    prop1 = run_prop1(inst, CANONICAL_ETA, CANONICAL_GAMMA, steps)
    prop1_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    violations, margins = corollary_sweep(draws, seed)
    sandwich_s = time.perf_counter() - t0

    sweep_zero = prop2_sweep(instances, seed, gamma=0.0)
    gamma0_max_rel = max(
        abs(r.distance_adaptive - r.distance_fixed)
        / max(r.distance_fixed, np.finfo(float).tiny)
        for r in sweep_zero["records"]
    )
    sweep_general = prop2_sweep(instances, seed + 1, gamma=0.05)
    sweep_aligned = prop2_sweep(instances, seed + 2, gamma=0.05, aligned=True)

    def strip(sweep: dict) -> dict:
        return {k: v for k, v in sweep.items() if k != "records"}

    checks = {
        "prop1_theta_converged": prop1.final_theta_distance < 1e-8,
        "prop1_alpha_converged": prop1.final_alpha_distance < 1e-6,
        "prop1_envelope_violations_zero": prop1.envelope_violations == 0,
        "prop1_alpha_contraction_violations_zero": prop1.alpha_contraction_violations == 0,
        "sandwich_violations_zero": violations == 0,
        "prop2_gamma0_exact": gamma0_max_rel <= 1e-15,
    }
    return {
        "canonical_instance": {
            "curvatures": list(CANONICAL_CURVATURES),
            "offsets": list(CANONICAL_OFFSETS),
            "dim": CANONICAL_DIM,
            "eta": CANONICAL_ETA,
            "gamma": CANONICAL_GAMMA,
            "rho": contraction_factor(inst, CANONICAL_ETA),
            "steps": steps,
        },
        "prop1": report_to_dict(prop1),
        "prop1_runtime_s": prop1_s,
        "sandwich": {
            "draws": draws,
            "violations": violations,
            "min_lower_margin": margins[0],
            "min_upper_margin": margins[1],
            "runtime_s": sandwich_s,
        },
        "prop2": {
            "gamma0_max_relative_difference": gamma0_max_rel,
            "gamma0": strip(sweep_zero),
            "general": strip(sweep_general),
            "aligned": strip(sweep_aligned),
        },
        "checks": checks,
        "all_passed": all(checks.values()),
    }


def cmd_verify_theory(args: argparse.Namespace) -> int:
    report = theory_report(args.steps, args.draws, args.instances, args.seed)
    out_path = Path(args.out) if args.out else output_root() / "theory_report.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for name, ok in report["checks"].items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"report: {out_path}")
    return 0 if report["all_passed"] else 1


# ---------------------------------------------------------------------------
# plot subcommand


def plot_metrics(paths: list[Path], out_path: Path, alpha: bool = False) -> None:
    """Render test-loss versus epoch (or the mixing-weight trajectories)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for path in paths:
        metrics = read_metrics_csv(path)
        if alpha:
            k = metrics[0].alpha.shape[0]
            if k == 0:
                raise MissingColumn("alpha_0")
            epochs = [m.epoch for m in metrics]
            traj = np.array([m.alpha for m in metrics])
            for i in range(k):
                ax.plot(epochs, traj[:, i], label=f"{path.stem} alpha_{i}")
        else:
            pts = [(m.epoch, m.test_loss) for m in metrics if m.test_loss is not None]
            if not pts:
                raise MissingColumn("test_loss")
            xs, ys = zip(*pts)
            ax.plot(xs, ys, label=path.stem)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mixing weight" if alpha else "test loss")
    ax.legend()
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def cmd_plot(args: argparse.Namespace) -> int:
    paths = [Path(p) for p in args.metrics]
    for p in paths:
        if not p.exists():
            raise FileNotFoundError(f"metrics file not found: {p}")
    out_path = Path(args.out) if args.out else output_root() / "plot.png"
    plot_metrics(paths, out_path, alpha=args.alpha)
    print(f"wrote {out_path}")
    return 0


# ---------------------------------------------------------------------------
# summarize subcommand


def cmd_summarize(args: argparse.Namespace) -> int:
    if args.dir:
        paths = sorted(
            p for p in Path(args.dir).glob("*.csv") if p.name != "summary.csv"
        )
    else:
        paths = [Path(p) for p in args.metrics]
    if not paths:
        raise InvalidSize("no metrics files to summarize")
    for p in paths:
        if not p.exists():
            raise FileNotFoundError(f"metrics file not found: {p}")
    rows = summarize_runs(paths)
    if args.out:
        write_summary(rows, Path(args.out))
    _print_summary(rows)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sizes", type=_int_list, default=None,
                   help="mean-estimation per-class train sizes (comma list)")
    p.add_argument("--test-per-class", type=int, default=None,
                   help="mean-estimation test samples per class")
    p.add_argument("--classes", type=int, default=None, help="blobs: number of classes")
    p.add_argument("--counts", type=_int_list, default=None,
                   help="blobs: per-class train counts (comma list)")
    p.add_argument("--dim", type=int, default=None, help="blobs: feature dimension")
    p.add_argument("--separation", type=float, default=None,
                   help="blobs: distance of each class center from the origin")
    p.add_argument("--test-counts", type=_int_list, default=None,
                   help="blobs: per-class test counts (default: balanced at max train count)")
    p.add_argument("--imbalance", choices=["linear", "logarithmic"], default=None,
                   help="blobs: subsample train classes by the named retention rule")
    p.add_argument("--train-csv", default=None, help="csv task: training data file")
    p.add_argument("--test-csv", default=None, help="csv task: test data file")
    p.add_argument("--label-column", default=None, help="csv task: label column name")
    p.add_argument("--class-column", default=None, help="csv task: class column name")
    p.add_argument("--feature-columns", type=lambda s: s.split(","), default=None,
                   help="csv task: explicit feature column names (comma list)")
    p.add_argument("--delimiter", default=None, help="csv task: field delimiter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="learn2mix",
        description="Adaptive class-proportion training experiments",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_gen = sub.add_parser("gen-data", help="write a generated dataset as CSV")
    p_gen.add_argument("--task", choices=TASKS, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", default=None, help="output directory")
    p_gen.add_argument("--config", default=None, help="JSON config file")
    _add_dataset_flags(p_gen)
    p_gen.set_defaults(func=cmd_gen_data)

    p_train = sub.add_parser("train", help="run a strategy x seed training grid")
    p_train.add_argument("--task", choices=TASKS, default=None)
    p_train.add_argument("--strategy", action="append", choices=STRATEGIES,
                         dest="strategies", default=None,
                         help="repeatable; default learn2mix and classical")
    p_train.add_argument("--seeds", type=int, default=None,
                         help="number of seeds (runs seeds 0..N-1)")
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--batch-size", type=int, default=None)
    p_train.add_argument("--learning-rate", type=float, default=None)
    p_train.add_argument("--mixing-rate", type=float, default=None)
    p_train.add_argument("--loss", choices=["mse", "cross_entropy"], default=None)
    p_train.add_argument("--optimizer", choices=["adam", "sgd"], default=None)
    p_train.add_argument("--eval-every", type=int, default=None)
    p_train.add_argument("--focal-focus", type=float, default=None,
                         help="focusing exponent for the focal strategy")
    p_train.add_argument("--hidden", type=int, default=None, help="hidden layer width")
    p_train.add_argument("--jobs", type=int, default=None,
                         help="worker processes for grid cells")
    p_train.add_argument("--save-model", action="store_true", default=None,
                         help="write a final-model checkpoint per run")
    p_train.add_argument("--wall-clock", action="store_true", default=None,
                         help="fill the elapsed_s column (breaks byte reproducibility)")
    p_train.add_argument("--config", default=None, help="JSON config file")
    p_train.add_argument("--out", default=None, help="output directory")
    _add_dataset_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_theory = sub.add_parser("verify-theory", help="numerical certification suite")
    p_theory.add_argument("--steps", type=int, default=10_000)
    p_theory.add_argument("--draws", type=int, default=10_000)
    p_theory.add_argument("--instances", type=int, default=1_000)
    p_theory.add_argument("--seed", type=int, default=0)
    p_theory.add_argument("--out", default=None, help="report path (JSON)")
    p_theory.set_defaults(func=cmd_verify_theory)

    p_plot = sub.add_parser("plot", help="plot metrics CSVs")
    p_plot.add_argument("metrics", nargs="+", help="metrics CSV files")
    p_plot.add_argument("--out", default=None, help="image path")
    p_plot.add_argument("--alpha", action="store_true",
                        help="plot mixing-weight trajectories instead of test loss")
    p_plot.set_defaults(func=cmd_plot)

    p_sum = sub.add_parser("summarize", help="recompute the checkpoint summary")
    p_sum.add_argument("metrics", nargs="*", help="metrics CSV files")
    p_sum.add_argument("--dir", default=None, help="summarize all run CSVs in a directory")
    p_sum.add_argument("--out", default=None, help="write the summary CSV here")
    p_sum.set_defaults(func=cmd_summarize)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (Learn2MixError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
