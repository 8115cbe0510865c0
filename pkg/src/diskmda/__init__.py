"""Domain-adaptive disk failure prediction on SMART attributes.

A multi-layer feedforward classifier is trained on a source drive model
and aligned to an unlabeled target drive model by penalizing feature
distribution discrepancy (kernel MMD and/or correlation alignment) at
one or both hidden layers, with loss weights set dynamically from the
loss magnitudes each step.
"""

from .da import KernelSpec, coral_loss, covariance, median_bandwidth, mmd_loss
from .errors import (
    DataError,
    DegenerateWeightsError,
    DivergenceError,
    InsufficientSamplesError,
    ParameterError,
    SchemaError,
    ShapeError,
)
from .evaluation import (
    ConfusionMatrix,
    ExperimentReport,
    ExperimentSpec,
    ReportRow,
    confusion,
    g_mean,
    run_matrix,
    run_single,
)
from .network import (
    MdaNetwork,
    NetworkConfig,
    forward,
    init_network,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from .pipeline import (
    FEATURE_COLUMNS,
    DomainDataset,
    NormalizationStats,
    build_domain,
    ingest,
    load_domain,
    normalize,
    normalize_pair,
    save_domain,
    split,
)
from .report import emit_report, render_csv, render_markdown, render_svg, report_id
from .synthetic import two_domain_gaussians, write_smart_fixture
from .training import TrainConfig, TrainHistory, train, write_history_csv
from .weighting import (
    DEFAULT_GAMMA,
    VARIANTS,
    LossBreakdown,
    dynamic_weights,
    total_loss,
    variant_layers,
)

__version__ = "0.1.0"

__all__ = [
    "ConfusionMatrix",
    "DEFAULT_GAMMA",
    "DataError",
    "DegenerateWeightsError",
    "DivergenceError",
    "DomainDataset",
    "ExperimentReport",
    "ExperimentSpec",
    "FEATURE_COLUMNS",
    "InsufficientSamplesError",
    "KernelSpec",
    "LossBreakdown",
    "MdaNetwork",
    "NetworkConfig",
    "NormalizationStats",
    "ParameterError",
    "ReportRow",
    "SchemaError",
    "ShapeError",
    "TrainConfig",
    "TrainHistory",
    "VARIANTS",
    "build_domain",
    "confusion",
    "coral_loss",
    "covariance",
    "dynamic_weights",
    "emit_report",
    "forward",
    "g_mean",
    "ingest",
    "init_network",
    "load_checkpoint",
    "load_domain",
    "median_bandwidth",
    "mmd_loss",
    "normalize",
    "normalize_pair",
    "predict",
    "render_csv",
    "render_markdown",
    "render_svg",
    "report_id",
    "run_matrix",
    "run_single",
    "save_checkpoint",
    "save_domain",
    "split",
    "total_loss",
    "train",
    "two_domain_gaussians",
    "variant_layers",
    "write_history_csv",
    "write_smart_fixture",
    "__version__",
]
