"""Martingale analysis on finite interval lattices.

Builds towers of nested interval partitions with exact rational geometry,
runs the associated martingale operators (averaging, differences, maximal
function, square function, BMO, Carleson constants, balayage), constructs
the stopping-time decompositions relating them, and verifies every promised
inequality with its exact constant over randomized instances.
"""

from .lattice import (
    EmptyInputError,
    GapOrOverlapError,
    HomogeneityStats,
    Interval,
    Lattice,
    LatticeError,
    NotARefinementError,
    build_lattice,
    dyadic_lattice,
    homogeneity_stats,
    random_lattice,
)
from .functions import CoefSequence, StepFunction
from .operators import (
    BadGenerationError,
    BmoNorm,
    ForeignIntervalError,
    LeafHasNoChildrenError,
    MartingaleDecomposition,
    average,
    balayage,
    bmo_c1_by_oscillation,
    bmo_norm,
    carleson_constant,
    carleson_constant_bruteforce,
    diff_generation,
    diff_interval,
    integral,
    lp_norm,
    martingale_decompose,
    maximal,
    mean_oscillation_sq,
    project,
    remove_root_means,
    square,
    square_truncated,
)
from .decompositions import (
    BadLambdaError,
    BmoDecomposition,
    MaximalDual,
    NegativeInputError,
    bmo_decompose,
    cz_decompose,
    duality_witness,
    maximal_dual,
)
from .harness import (
    DISTRIBUTIONS,
    OBJECTIVES,
    CheckRecord,
    FuzzConfig,
    FuzzResult,
    LatticeMismatchError,
    SharpnessResult,
    UnknownDistributionError,
    UnknownObjectiveError,
    VerificationReport,
    check_instance,
    fuzz,
    instance_for_trial,
    random_coefficients,
    random_function,
    replay_artifact,
    sharpness_search,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # lattice
    "Interval", "Lattice", "HomogeneityStats",
    "build_lattice", "dyadic_lattice", "random_lattice", "homogeneity_stats",
    "LatticeError", "EmptyInputError", "GapOrOverlapError", "NotARefinementError",
    # functions
    "StepFunction", "CoefSequence",
    # operators
    "average", "project", "diff_interval", "diff_generation",
    "martingale_decompose", "MartingaleDecomposition",
    "maximal", "square", "square_truncated", "integral", "lp_norm",
    "bmo_norm", "BmoNorm", "mean_oscillation_sq", "bmo_c1_by_oscillation",
    "carleson_constant", "carleson_constant_bruteforce", "balayage",
    "remove_root_means",
    "ForeignIntervalError", "BadGenerationError", "LeafHasNoChildrenError",
    # decompositions
    "cz_decompose", "bmo_decompose", "BmoDecomposition",
    "maximal_dual", "MaximalDual", "duality_witness",
    "NegativeInputError", "BadLambdaError",
    # harness
    "DISTRIBUTIONS", "OBJECTIVES",
    "FuzzConfig", "FuzzResult", "CheckRecord", "VerificationReport",
    "SharpnessResult",
    "random_function", "random_coefficients", "instance_for_trial",
    "check_instance", "summarize", "fuzz", "replay_artifact",
    "sharpness_search",
    "UnknownDistributionError", "LatticeMismatchError", "UnknownObjectiveError",
]
