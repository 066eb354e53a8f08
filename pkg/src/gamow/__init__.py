"""Higher-order Gamow vectors: Jordan-chain evolution, density operators and pole line shapes."""

from .core import (
    ArrowOfTimeViolation,
    BadGrid,
    ComplexPole,
    EmptyGrid,
    GamowError,
    GamowOperator,
    GamowState,
    IndexOutOfRange,
    NonFinite,
    TimeGrid,
    binomial,
    pole_position,
)
from .density import (
    DecayReport,
    build_density,
    check_exponential,
    evolve_density,
    exponential_subspace,
    frobenius_norm,
    operator_rank,
    projection_residual,
)
from .fitting import (
    AllFitsFailed,
    FitOptions,
    FitResult,
    IllConditioned,
    NoSignal,
    NonConvergence,
    PoleModel,
    ResonancePole,
    fit_poles,
    model_intensity,
    select_order,
)
from .lineshape import (
    DivergentPoint,
    WeightLengthMismatch,
    higher_order_lineshape,
    lorentzian,
    lorentzian_derivative,
    pole_term,
)
from .semigroup import evolution_matrix, evolve_ket, evolve_state, expm_oracle, hamiltonian_matrix
from .series import Series, sample_series

__version__ = "0.1.0"
