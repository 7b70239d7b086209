"""Transient analysis of Erlang queues with batch arrivals under random clocks.

The library evaluates closed-form Mittag-Leffler series for the transient
state probabilities, queue-length law, mean queue length, busy period and
inter-event times of an Erlang queue with batch arrivals whose time argument
is replaced by an inverse tempered stable subordinator, and cross-validates
every series against uniformization and Monte Carlo oracles.  A gamma-clock
variant is supported at simulation and density level.
"""

from .analytics import (
    CoefficientSet,
    Evaluator,
    SeriesConfig,
    SeriesContext,
    SeriesResult,
    busy_period_cdf,
    coefficients,
    interarrival_survival,
    interphase_survival,
    mean_queue_customers,
    mean_queue_length,
    pgf,
    queue_length_prob,
    sojourn_survival,
    state_prob,
    total_probability,
    zero_state_prob,
)
from .base_queue import (
    ProbabilityTable,
    QueueParams,
    StatePhase,
    Trajectory,
    default_cap,
    generator,
    phase_index,
    phase_inverse,
    simulate_gillespie,
    transient_uniformization,
)
from .fractional import (
    DerivResult,
    FracParams,
    LaplaceResult,
    SampledFunction,
    caputo_tempered_derivative,
    caputo_tempered_grid,
    numerical_laplace,
    rl_tempered_derivative,
)
from .montecarlo import (
    BusyPeriodSample,
    EstimateTable,
    KSResult,
    SimPlan,
    collect_inter_event_times,
    ks_statistic,
    simulate_busy_period,
    simulate_time_changed,
)
from .residuals import ResidualGrid, mean_residual, system_residuals
from .special import (
    DomainError,
    EvalResult,
    MLArgs,
    UnconvergedError,
    log_gamma,
    ml2,
    ml3,
)
from .subordinators import (
    GammaParams,
    InversePath,
    TemperedStableParams,
    gamma_density,
    gamma_inverse_path,
    inverse_gamma_cdf,
    inverse_gamma_density,
    inverse_path,
    laplace_exponent,
    sample_stable_increment,
    sample_tempered_stable_increment,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
