"""semigraph: Markov chains on graph state spaces subordinated to renewal
counting processes, with stopping-time experiments and an interbank-market
model."""

from .experiments import (
    ErgodicityResult,
    ExperimentConfig,
    ExperimentResult,
    SummaryStats,
    TWO_STATE_MATRIX,
    ergodicity_experiment,
    kernel_example_a,
    kernel_example_b,
    run_experiment,
    scan_beta,
    scan_m,
)
from .graphs import (
    GraphMode,
    GraphState,
    connected_components,
    contains_triangle,
    degree_sequence,
    determinant,
    edge_count,
    permanent,
    permanent_polynomial,
    pperm_transition_delta,
    state_space_size,
)
from .interbank import MarketConfig, market_config_from_dict, run_market
from .mittag import MLParams, ml_function, ml_sample, ml_sample_n, ml_survival
from .renewal import (
    EpochSequence,
    Exponential,
    MittagLeffler,
    count_at,
    erlang_cdf,
    estimate_renewal_function,
    generate_epochs,
    law_from_config,
    poisson_pmf,
    verify_first_renewal_equation,
)
from .subordinate import (
    GlobalPolicy,
    MatrixKernel,
    StateDependentPolicy,
    StoppingResult,
    TrajectoryRecord,
    chapman_kolmogorov_check,
    marginal_at_step,
    simulate,
    state_at,
    stopping_time,
    trajectory_streams,
)

__version__ = "0.1.0"
