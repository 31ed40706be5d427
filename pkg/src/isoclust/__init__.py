"""Isotropy and cluster-structure metrics for point clouds, plus a
gradient-optimization harness that tracks the trade-off between them."""

from .errors import DataError, MetricError, NumericalError
from .geometry import (
    PointCloud,
    VarianceVector,
    covariance,
    pairwise_sq_dists,
    pca_reorient,
    variance_from_pairs,
)
from .metrics import (
    AuxIndices,
    IsoScoreReport,
    LabelAssignment,
    SilhouetteReport,
    aux_indices,
    chord_cos_identity_residual,
    cost,
    isoscore,
    isotropy_objective,
    sign_fn,
    silhouette,
    silhouette_objective,
    subsample,
)
from .objectives import (
    ClassifierHead,
    ClassifierObjectiveTerms,
    LossResult,
    bce_multilabel_loss,
    classifier_objective,
    classifier_objective_terms,
    cross_entropy_loss,
    dot_distance_identity,
    sign_wgt,
    triplet_loss,
    triplet_objective_and_bound,
)
from .training import (
    AdamState,
    TrainConfig,
    Trajectory,
    TrajectoryRecord,
    adam_step,
    read_trajectory,
    run_experiment,
    write_trajectory,
)
from .datagen import (
    MixtureSpec,
    MultilabelSpec,
    generate_mixture,
    load_dataset,
    save_dataset,
)
from .stats import (
    CorrelationReport,
    average_ranks,
    correlate_series,
    correlate_trajectory,
    pearson,
    spearman,
)

__version__ = "0.1.0"
