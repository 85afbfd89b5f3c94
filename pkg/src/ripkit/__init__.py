"""Sharp restricted-isometry toolkit.

Recovery programs for sparse signals and low-rank matrices, restricted
isometry constants, null space property certificates, the division
tableau, boundary counterexamples and a seeded experiment harness.
"""

from .constructions import (
    CounterexampleKit,
    identifiability_gap_example,
    rank_r_inner_bound_check,
    sharp_counterexample_matrix,
    sharp_counterexample_signal,
    tempered_counterexample_matrix,
    tempered_counterexample_signal,
)
from .division import DivisionTableau, divide, tableau_violations, tail_power_check
from .errors import (
    BudgetExceededError,
    InfeasibleDivisionError,
    InfeasibleProblemError,
    InvalidInputError,
    InvalidWitnessError,
    NotPositiveDefiniteError,
    OutOfRegimeError,
    RipkitError,
)
from .nsp import (
    MatrixNspWitness,
    NspCertificate,
    failing_pair_from_witness,
    nsp_certify_signal,
    nsp_falsify_matrix,
    null_space_basis,
)
from .recovery import (
    LinearMap,
    RecoveryInstance,
    SolveReport,
    SparseApprox,
    best_s_term,
    error_bound,
    nuclear_norm,
    singular_value_threshold,
    soft_threshold,
    solve_matrix,
    solve_signal,
    unvec,
    vec,
)
from .rip import (
    RipEstimate,
    ScalingReport,
    matrix_rip_ratio,
    ric_exact_signal,
    ric_lower_matrix,
    ric_random_signal,
    rip_deviation,
    scaling_lemma_report,
)

__version__ = "0.1.0"
