"""Pairwise preference elicitation with information-maximizing trial design."""

from .acquisition import (
    MiConfig,
    ScoredTrial,
    design_trial,
    generate_alternative,
    mutual_information,
    next_reference,
    predictive_prob,
)
from .errors import (
    ConvergenceWarning,
    DimensionMismatch,
    DomainError,
    InsufficientSamples,
    InvalidState,
    PrefElicitError,
    SingularMatrix,
)
from .inference import (
    GaussianBelief,
    MhConfig,
    PosteriorSample,
    conditional_gamma,
    marginal_alpha,
    mh_sample,
    moment_match,
    refit_history,
    update,
)
from .model import (
    Response,
    TransformedParams,
    Trial,
    UserParams,
    from_transformed,
    log_likelihood,
    preference_value,
    response_probability,
    sample_response,
    to_transformed,
)
from .probit import binary_entropy_bits, normal_cdf, normal_icdf
from .session import (
    BenchmarkResult,
    SessionConfig,
    SessionState,
    StoppingRule,
    benchmark,
    estimate,
    init_session,
    rmse,
    rsu,
    run_simulation,
    sample_truth,
    should_stop,
    submit_response,
)

__version__ = "0.1.0"
