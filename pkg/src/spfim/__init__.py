"""Monte Carlo estimation of the Fisher information matrix from
simultaneous-perturbation Hessian estimates, with shared (standard) or
per-datum independent perturbations."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DimensionError,
    NotPositiveDefiniteError,
    OracleError,
    ReplicateError,
    ValidationError,
)
from .matrixcore import (  # noqa: E402
    LowerTriangularFactor,
    SymmetricMatrix,
    cholesky,
    mvn_sample,
    spectral_norm,
    sym_from_packed,
)
from .perturbation import (  # noqa: E402
    PerturbationSpec,
    PerturbationVector,
    sample_independent_perturbations,
    sample_perturbation,
)
from .models import (  # noqa: E402
    mixture_model,
    quadratic_model,
    spn_analytic_fim,
    spn_model,
)
from .accumulate import VarianceAccumulator, merge_accumulators  # noqa: E402
from .estimator import (  # noqa: E402
    INDEPENDENT,
    STANDARD,
    EstimatorConfig,
    FIMEstimate,
    estimate_fim,
    sp_hessian_estimate,
    sp_hessian_estimate_independent,
)
from .oracle import (  # noqa: E402
    FDConfig,
    fd_gradient,
    fd_hessian,
    mc_true_fim,
    relative_spectral_error,
)
