"""Multiple testing statistics for t-statistic literatures under publication bias."""

from . import errors
from .model import (
    ExponentialLatent,
    Literature,
    LogisticRule,
    LogNormalLatent,
    MixtureNormalLatent,
    ModelParams,
    ScaledTLatent,
    StaircaseRule,
    ThreeStepRule,
    density_false,
    density_marginal,
    density_published,
    density_true,
    hlz_benchmark,
    identification_epsilon,
    lognormal_benchmark,
    posterior_mean_mu,
    published_mass,
    tail_prob,
)
from .mtstats import (
    HurdleResult,
    ShrinkageResult,
    delta_correction,
    empirical_fdr_counts,
    fdr_bayes,
    fnr,
    hurdle_for_fdr,
    local_fdr,
    mean_local_fdr_approx,
    mean_published_local_fdr,
    mean_published_shrinkage,
    shrinkage,
    stepup_hurdle,
)
from .qml import FitResult, FitSpec, fit, neg_mean_loglik, profile_loglik, spec_variant
from .litsim import (
    EvidenceSimConfig,
    SimConfig,
    estimate_lambda_misspecified,
    shrinkage_bias_study,
    simulate,
    simulate_evidence,
    simulate_published,
)
from .bootstrap import (
    BootConfig,
    BootResult,
    PanelReturns,
    bootstrap_nonparametric,
    bootstrap_semiparametric,
    draw_residual_panel,
    summarize,
)

__version__ = "0.1.0"
