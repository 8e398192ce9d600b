"""Geodesic-spread stability analysis of a harmonic-oscillator ensemble.

Integrates the spread (geodesic deviation) equations of the Eisenhart and
Jacobi metrics along the analytic motion of N uncoupled oscillators and
estimates the resulting Lyapunov indicator.
"""

from .errors import (
    DimensionMismatchError,
    GeodesicSpreadError,
    InsufficientSeriesError,
    InvalidParameterError,
    NonFiniteStateError,
    SingularKineticEnergyError,
    ZeroNormStateError,
)
from .oscillator import (
    FluctuationStats,
    OscillatorConfig,
    PhasePoint,
    arc_length,
    fluctuation_ratio,
    kinetic_closed_form,
    phases,
    sigma,
    sigma_limit,
    sigma_numeric,
    trajectory,
)
from .propagation import (
    IntegrationParams,
    LyapunovEstimate,
    estimate_lambda,
    lambda_series_tail_slope,
    renormalize,
    step_rk4,
)
from .spread import (
    CouplingMatrices,
    SpreadState,
    compare_rhs,
    couplings,
    eisenhart_rhs,
    jacobi_rhs_closed,
    jacobi_rhs_generic,
)

__version__ = "0.1.0"
