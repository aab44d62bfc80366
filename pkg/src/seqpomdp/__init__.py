"""Grid-based dynamic programming for a tractable class of sequencing POMDPs.

The belief over customer profiles after any rejection history is pinned down by
a K-dimensional exponent vector gamma, so value iteration runs on a grid over
gamma space instead of over the probability simplex.
"""

from .belief import (
    bayes_update,
    gamma_from_history,
    grad_h,
    h_from_belief,
    h_gamma,
    posterior_from_gamma,
)
from .errors import (
    DomainError,
    GuardExceeded,
    HorizonExhausted,
    IntegrityError,
    ModelFormatError,
    ModelValidationError,
    SeqPomdpError,
)
from .exact_dp import (
    enumerate_sequences,
    exact_value,
    exact_values,
    rejection_state_count,
    single_product_closed_form,
)
from .grid_dp import (
    BoundsReport,
    Solution,
    StagePolicy,
    StageValueTable,
    bounds_report,
    evaluate_table,
    grid_point_estimate,
    horizon_for_epsilon,
    snap,
    solve,
    spacing_for_epsilon,
)
from .model import (
    Model,
    ModelSpec,
    NoisyOrSpec,
    build_noisy_or,
    compute_C1,
    compute_C2,
    compute_M,
    compute_zeta_min,
    compute_zeta_star,
    response_prob,
    scalability_caps,
    validate,
)
from .artifacts import load_solution, save_solution
from .modelfile import dump_model, load_model
from .policy_eval import next_product, policy_value_exact, simulate

__version__ = "0.1.0"
