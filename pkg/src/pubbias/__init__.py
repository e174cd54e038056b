"""Selection-adjusted inference for collections of published test statistics.

The package models publication as a threshold rule applied to noisy
t-statistics, and provides the pieces needed to reason about the published
sample: priors over true effects, exact and Monte Carlo selection
statistics (shrinkage, false discovery rate, publication rate), dispersion
estimation from truncated t-stats, multiple-testing hurdles, a
publication-process simulator, and analytics for meta-study return panels.
"""

__version__ = "0.1.0"

from .corrections import (
    conditional_mean_theta,
    correction_report,
    fdr_pub,
    fdr_upper_bound,
    jensen_shrinkage,
    null_exceedance_table,
    posterior_mean_theta,
    shrinkage_pub,
)
from .errors import (
    BootstrapError,
    DataError,
    DegenerateRuleError,
    DomainError,
    InsufficientDataError,
    NoSolutionError,
    PubBiasError,
    QuadratureError,
    SimulationError,
)
from .estimation import (
    TruncatedSampleSet,
    TStatSample,
    bootstrap_se,
    fit_diagnostics,
    gmm_sigma_theta,
    qmle_sigma_theta,
)
from .multiple_testing import (
    PValueSet,
    bh,
    bonferroni,
    by,
    holm,
    hurdle_for_fdr,
    tstat_to_pvalue,
)
from .numerics import RngStream
from .panel import (
    ReturnPanel,
    cluster_bootstrap_mean,
    compare_tstats,
    event_time_curve,
    exceedance_table,
    insample_stats,
    load_panel,
    mean_autocorrelation,
    pairwise_correlations,
    pca_variance_curve,
    scale_to_insample_mean,
    sign_normalize,
)
from .priors import (
    AbsoluteThreshold,
    ModelSpec,
    NormalZeroMean,
    PointMassMixture,
    ScaledStudentT,
    SignedThreshold,
    marginal_t_density,
    model_from_dict,
)
from .simulation import (
    SimulationSpec,
    compare_analytic,
    scatter_export,
    simulate,
)

__all__ = [
    "__version__",
    "AbsoluteThreshold", "BootstrapError", "DataError", "DegenerateRuleError",
    "DomainError", "InsufficientDataError", "ModelSpec", "NoSolutionError",
    "NormalZeroMean", "PointMassMixture", "PubBiasError", "PValueSet",
    "QuadratureError", "ReturnPanel", "RngStream", "ScaledStudentT",
    "SignedThreshold", "SimulationError", "SimulationSpec", "TStatSample",
    "TruncatedSampleSet",
    "bh", "bonferroni", "bootstrap_se", "by", "cluster_bootstrap_mean",
    "compare_analytic", "compare_tstats", "conditional_mean_theta",
    "correction_report", "event_time_curve", "exceedance_table", "fdr_pub",
    "fdr_upper_bound", "fit_diagnostics", "gmm_sigma_theta", "holm",
    "hurdle_for_fdr", "insample_stats", "jensen_shrinkage", "load_panel",
    "marginal_t_density", "mean_autocorrelation", "model_from_dict",
    "null_exceedance_table", "pairwise_correlations", "pca_variance_curve",
    "posterior_mean_theta", "qmle_sigma_theta", "scale_to_insample_mean",
    "scatter_export", "shrinkage_pub", "sign_normalize", "simulate",
    "tstat_to_pvalue",
]
