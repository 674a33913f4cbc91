"""Adaptive batch-composition training for class-imbalanced learning.

The core idea: keep a simplex vector alpha of per-class batch shares,
and once per epoch move it toward the normalized per-class loss vector,
so classes that lag get more representation in every batch. Batches are
composed by cyclic per-class selection, so even a tiny class can supply
an outsized share through wrap-around. Five baselines (classical fixed
proportions, class-level focal loss, SMOTE oversampling, loss-proportional
importance sampling, self-taught curriculum) share the same trainer and
metrics surface, and a certification harness checks the method's
convergence guarantees numerically on strongly convex quadratics.
"""

from .data import (
    ClassPartitionedDataset,
    ClassStore,
    CsvSchema,
    ImbalanceSpec,
    Sample,
    apply_imbalance,
    from_class_arrays,
    load_csv,
    make_gaussian_blobs,
    make_mean_estimation,
    mean_estimation_features,
    partition_by_class,
    write_dataset_csv,
)
from .errors import (
    ClassTooSmall,
    DimensionMismatch,
    EmptyClass,
    InvalidSize,
    Learn2MixError,
    MissingColumn,
    NegativeLoss,
    NonFiniteLoss,
    NonNumericFeature,
    ParseError,
    StepDiverged,
    ZeroTotalLoss,
)
from .mix import (
    BatchPlan,
    ClassLossVector,
    MixingState,
    allocate_counts,
    mixing_fixed_point,
    normalize_losses,
    update_mixing,
)
from .nn import (
    AdamState,
    DenseNet,
    Layer,
    LossKind,
    adam_step,
    classification_net,
    forward,
    init_dense,
    load_checkpoint,
    loss_and_grad,
    per_sample_losses,
    regression_net,
    save_checkpoint,
    sgd_step,
)
from .sampler import CyclicCursor, begin_epoch, new_cursor, next_batch
from .theory import (
    Prop2Record,
    QuadraticInstance,
    TheoryReport,
    check_corollary1,
    check_prop2_step,
    contraction_factor,
    corollary_sweep,
    prop2_sweep,
    random_instance,
    run_prop1,
)
from .train import (
    EpochMetrics,
    EvalResult,
    TrainConfig,
    compute_classwise_losses,
    curriculum_fraction,
    evaluate,
    focal_weights,
    read_metrics_csv,
    smote_oversample,
    train,
    train_classical,
    train_curriculum,
    train_focal,
    train_is,
    train_learn2mix,
    train_smote,
    write_metrics_csv,
)

__version__ = "0.1.0"
