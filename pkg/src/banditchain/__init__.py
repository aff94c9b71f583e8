"""Stochastic structured prediction under bandit feedback on chain models.

The library pairs a linear-chain log-linear model (exact partition function,
feature expectations, sampling and MAP decoding) with three stochastic
training objectives driven purely by scalar feedback on sampled outputs, an
enumeration oracle that certifies every estimator on small output spaces,
and convergence diagnostics for finished runs.
"""

from .chain import (
    ChainInstance,
    ChainLattice,
    ChainModel,
    LabelAlphabet,
    build_lattice,
    expected_features,
    extract_features,
    feature_id,
    lattice_score,
    log_partition,
    map_decode,
    prob,
    sample,
    sample_many,
)
from .checks import CheckReport, CheckResult, run_property_checks
from .dataio import (
    DataError,
    RunConfig,
    compare_report_files,
    load_config,
    read_checkpoint,
    read_dataset,
    read_report,
    run_train,
    write_checkpoint,
    write_dataset,
    write_report,
)
from .diagnostics import (
    ComparisonSummary,
    ConvergenceReport,
    compare_runs,
    convergence_report,
    grad_norm_sq,
    lipschitz_estimate,
    variance_estimate,
)
from .feedback import (
    FeedbackOracle,
    LossKind,
    bio_spans,
    chunk_f1_loss,
    hamming_loss,
    loss_fn,
)
from .objectives import (
    ClippingConfig,
    ObjectiveKind,
    PairSample,
    ce_gradient,
    el_gradient,
    pair_expected_features,
    pair_feedback,
    pr_gradient,
    pr_sample_pair,
    pr_sample_pairs_many,
)
from .oracle import (
    BudgetExceededError,
    EnumeratedDistribution,
    OracleBudget,
    brute_expected_features,
    brute_gradient,
    brute_log_partition,
    brute_objective,
    distribution,
    enumerate_outputs,
    finite_diff_gradient,
    gain_mass,
    pair_distribution,
)
from .sparse import SparseVector, mean_vector
from .synthetic import chunk_alphabet, generate_chunk_instances
from .trainer import (
    StepRecord,
    Trajectory,
    TrainerConfig,
    evaluate,
    select_best,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "ChainInstance",
    "ChainLattice",
    "ChainModel",
    "CheckReport",
    "CheckResult",
    "ClippingConfig",
    "ComparisonSummary",
    "ConvergenceReport",
    "DataError",
    "EnumeratedDistribution",
    "FeedbackOracle",
    "LabelAlphabet",
    "LossKind",
    "ObjectiveKind",
    "OracleBudget",
    "PairSample",
    "RunConfig",
    "SparseVector",
    "StepRecord",
    "TrainerConfig",
    "Trajectory",
    "bio_spans",
    "brute_expected_features",
    "brute_gradient",
    "brute_log_partition",
    "brute_objective",
    "build_lattice",
    "ce_gradient",
    "chunk_alphabet",
    "chunk_f1_loss",
    "compare_report_files",
    "compare_runs",
    "convergence_report",
    "distribution",
    "el_gradient",
    "enumerate_outputs",
    "evaluate",
    "expected_features",
    "extract_features",
    "feature_id",
    "finite_diff_gradient",
    "gain_mass",
    "generate_chunk_instances",
    "grad_norm_sq",
    "hamming_loss",
    "lattice_score",
    "lipschitz_estimate",
    "load_config",
    "log_partition",
    "loss_fn",
    "map_decode",
    "mean_vector",
    "pair_distribution",
    "pair_expected_features",
    "pair_feedback",
    "pr_gradient",
    "pr_sample_pair",
    "pr_sample_pairs_many",
    "prob",
    "read_checkpoint",
    "read_dataset",
    "read_report",
    "run_property_checks",
    "run_train",
    "sample",
    "sample_many",
    "select_best",
    "train",
    "variance_estimate",
    "write_checkpoint",
    "write_dataset",
    "write_report",
]
