"""Coherence metrics, dephasing dynamics, decay fitting and recurrence bounds
for closed registers of fixed spin-1/2 particles."""

from .density import (
    MetricsReport,
    Spectrum,
    check_density_matrix,
    coherence,
    eigen_spectrum,
    metrics_report,
    partial_trace,
    tensor_product,
    von_neumann_entropy,
)
from .errors import (
    CapacityError,
    DegenerateGeometryError,
    InsufficientDataError,
    InvalidStateError,
    ParseError,
    SpincohError,
)
from .spinmodel import (
    ETA_ELECTROMAGNETIC,
    ETA_LI6_SPIN,
    CoherenceTrace,
    ModelParams,
    SingleParticleState,
    SpinEnsemble,
    brute_force_reduced_density,
    default_time_grid,
    offdiag_correlation,
    reduced_density,
    reduced_density_rotated,
    sample_ensemble,
    simulate_coherence,
    spin_basis_transform,
)
from .decayfit import (
    FitResult,
    StretchedExponentialDecay,
    crude_decay_scale,
    decay_profile,
    estimate_floor,
    fit_decay,
    floor_window,
)
from .recurrence import (
    RecurrenceEstimate,
    default_t_unit,
    pair_periods,
    poincare_log_bound,
    rational_approx,
    recurrence_law,
)
from .sweep import (
    CellStats,
    RunRecord,
    SweepCell,
    decay_exponent_law,
    decoherence_time_law,
    low_fluctuation_regime,
    run_cell,
    run_seed,
)

__version__ = "0.1.0"
