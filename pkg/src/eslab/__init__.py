"""Laboratory for covariance matrices learned by rank-based Gaussian selection
on positive quadratic landscapes."""

from .landscape import (
    Hessian,
    HessianKind,
    Objective,
    custom_hessian,
    eval_objective,
    eval_objective_many,
    hadamard_matrix,
    make_hessian,
    minimizer,
    plane_rotation,
    spectrum_sums,
)
from .distributions import (
    GammaApprox,
    WinnerValueDist,
    gamma_cdf,
    gamma_params,
    gamma_pdf,
    gamma_quantile,
    gen_chi2_cdf,
    order_stat_cdf,
    order_stat_pdf,
    regularized_lower_gamma,
    regularized_upper_gamma,
    winner_value_cdf,
    winner_value_pdf,
)
from .sampling import (
    Best,
    CovarianceAccumulator,
    LthDegree,
    MuAverage,
    SampleConfig,
    WinnerRecord,
    merge,
    perturbed_identities,
    perturbed_identity,
    run_iteration,
    run_sampling,
    sample_population,
    select,
)
from .metrics import (
    ErrorReport,
    alpha_posteriori,
    commutator_frobenius,
    max_diag_deviation,
    max_offdiag,
    normalize_hc,
)
from .harness import (
    Histogram,
    PerturbationReport,
    SweepSpec,
    density_experiment,
    derive_cell_seed,
    ks_distance,
    read_config,
    run_perturbation_reference,
    run_sweep,
    write_csv,
    write_histogram_csv,
)

__version__ = "0.1.0"
