"""GLK distributions, GLK-INAR(1) processes and Bayesian inference."""

from .distribution import (
    FamilyTag,
    GlkMoments,
    GlkParams,
    GpParams,
    PmfTable,
    glk_log_pmf,
    glk_moments,
    glk_pgf,
    glk_pmf_table,
    glk_sample,
    glk_truncated_pmf_recursion,
    gp_log_pmf,
    gp_pmf_table,
    gp_sample,
    special_case_of,
)
from .diagnostics import (
    ChainDiagnostics,
    LogMarginalEstimate,
    ModelScore,
    acf,
    chain_diagnostics,
    dic,
    ess_and_ineff,
    geweke,
    log_marginal_likelihood,
    model_score,
    nse,
)
from .errors import (
    ConfigurationError,
    DataError,
    DiagnosticsError,
    DomainError,
    GlkInarError,
    InitializationError,
    NumericalError,
)
from .inference import (
    AmcmcConfig,
    PosteriorDraws,
    PriorSpec,
    amcmc_run,
    credible_interval,
    inverse_reparametrize,
    log_likelihood,
    log_posterior_eta,
    log_prior,
    reparametrize,
)
from .process import (
    ConditionalMoments,
    CountSeries,
    InarModel,
    StationaryMoments,
    Variant,
    aggregate,
    conditional_moments,
    simulate,
    stationary_distribution,
    stationary_moments,
    thin,
    transition_log_prob,
    transition_matrix,
)
from .special import log_gamma, log_rising_factorial, log_sum_exp, stirling_tables

__version__ = "0.1.0"
