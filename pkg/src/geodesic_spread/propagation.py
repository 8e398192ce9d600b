"""Fixed-step propagation of the spread equations and Lyapunov-indicator estimation.

The spread state (xi, xi_dot) is advanced with classical RK4 on a uniform
time grid; the analytic trajectory is evaluated at every substep.  Every
``renorm_interval`` the state is rescaled to unit composite norm

    ||(omega*xi, xi_dot)||

and the log of the factor is accumulated.  The indicator is
``lambda = log_norm(t_max) / D`` with D either t_max or the Jacobi arc
length s(t_max) = integral 2T dt.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np

from . import _kernel
from .errors import (
    InsufficientSeriesError,
    InvalidParameterError,
    NonFiniteStateError,
    SingularKineticEnergyError,
    ZeroNormStateError,
)
from .oscillator import TWO_PI, OscillatorConfig, fluctuation_ratio, trajectory
from .spread import SpreadState, eisenhart_rhs, jacobi_rhs_closed, jacobi_rhs_generic

log = logging.getLogger(__name__)

Metric = Literal["eisenhart", "jacobi-generic", "jacobi-closed"]
METRICS = ("eisenhart", "jacobi-generic", "jacobi-closed")
XI0_POLICIES = ("deterministic-basis", "seeded-random-unit")
LAMBDA_UNITS = ("per-time", "per-arc-length")

_METRIC_CODES = {
    "eisenhart": _kernel.EISENHART,
    "jacobi-generic": _kernel.JACOBI_GENERIC,
    "jacobi-closed": _kernel.JACOBI_CLOSED,
}

#: (t, xi, xi_dot) -> d^2 xi / dt^2
RhsFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IntegrationParams:
    """Integration settings, expressed in units of the oscillator period 2*pi/omega.

    Defaults: dt = period/200, t_max = 500 periods, renormalization every
    period, kinetic floor 1e-12 * <T>.
    """

    steps_per_period: int = 200
    t_max_periods: float = 500.0
    renorm_periods: float = 1.0
    epsilon_rel: float = 1e-12
    xi0_policy: str = "deterministic-basis"
    seed: int = 0
    metric: str = "jacobi-generic"
    lambda_units: str = "per-time"

    def __post_init__(self) -> None:
        if int(self.steps_per_period) != self.steps_per_period or self.steps_per_period < 1:
            raise InvalidParameterError(
                f"steps_per_period must be a positive integer, got {self.steps_per_period!r}"
            )
        if not self.t_max_periods * self.steps_per_period >= 100:
            raise InvalidParameterError("t_max must be at least 100 steps")
        if not self.renorm_periods * self.steps_per_period >= 1:
            raise InvalidParameterError("renorm interval must be at least one step")
        if not self.epsilon_rel > 0:
            raise InvalidParameterError(f"epsilon must be > 0, got {self.epsilon_rel!r}")
        if self.xi0_policy not in XI0_POLICIES:
            raise InvalidParameterError(f"xi0_policy must be one of {XI0_POLICIES}")
        if self.metric not in METRICS:
            raise InvalidParameterError(f"metric must be one of {METRICS}")
        if self.lambda_units not in LAMBDA_UNITS:
            raise InvalidParameterError(f"lambda_units must be one of {LAMBDA_UNITS}")

    def schedule(self, config: OscillatorConfig) -> "Schedule":
        dt = config.period / self.steps_per_period
        return Schedule(
            dt=dt,
            n_steps=int(round(self.t_max_periods * self.steps_per_period)),
            renorm_every=max(1, int(round(self.renorm_periods * self.steps_per_period))),
            epsilon_t=config.kinetic_floor(self.epsilon_rel),
        )


@dataclass(frozen=True)
class Schedule:
    """Absolute time grid resolved for one configuration."""

    dt: float
    n_steps: int
    renorm_every: int
    epsilon_t: float

    @property
    def t_max(self) -> float:
        return self.n_steps * self.dt

    @property
    def renorm_interval(self) -> float:
        return self.renorm_every * self.dt


@dataclass(frozen=True)
class LyapunovEstimate:
    """Result of one Lyapunov-indicator integration.

    ``series`` has one row (t, running lambda) per renormalization; the
    last row is at t_max and its value equals ``exponent``.
    """

    exponent: float
    series: np.ndarray
    renorm_count: int
    min_kinetic: float
    arc_length_total: float
    diverged: bool
    lambda_units: str = "per-time"
    final_state: SpreadState | None = field(default=None, repr=False)
    abort_time: float | None = None


def spread_norm(state: SpreadState, omega: float) -> float:
    """Composite norm ||(omega*xi, xi_dot)||; both blocks carry units of 1/time."""
    return math.sqrt(omega**2 * float(np.dot(state.xi, state.xi)) + float(np.dot(state.xi_dot, state.xi_dot)))


def renormalize(state: SpreadState, omega: float) -> SpreadState:
    """Rescale to unit composite norm, adding the log of the old norm to ``log_norm``."""
    nrm = spread_norm(state, omega)
    if nrm == 0.0:
        raise ZeroNormStateError("cannot renormalize a zero spread state")
    return SpreadState(
        t=state.t,
        xi=state.xi / nrm,
        xi_dot=state.xi_dot / nrm,
        log_norm=state.log_norm + math.log(nrm),
    )


def step_rk4(rhs: RhsFn, state: SpreadState, dt: float) -> SpreadState:
    """One classical RK4 step of the first-order system (xi, xi_dot)."""
    t, x, v = state.t, state.xi, state.xi_dot
    h = 0.5 * dt
    a1 = rhs(t, x, v)
    v2 = v + h * a1
    a2 = rhs(t + h, x + h * v, v2)
    v3 = v + h * a2
    a3 = rhs(t + h, x + h * v2, v3)
    v4 = v + dt * a3
    a4 = rhs(t + dt, x + dt * v3, v4)
    x_new = x + dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
    v_new = v + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(v_new))):
        raise NonFiniteStateError(f"non-finite spread state after step to t={t + dt:.6g}")
    return SpreadState(t=t + dt, xi=x_new, xi_dot=v_new, log_norm=state.log_norm)


def metric_rhs(config: OscillatorConfig, metric: str, floor: float | None = None) -> RhsFn:
    """Bind a metric's spread equation to ``config`` as an (t, xi, xi_dot) callable."""
    if metric == "eisenhart":
        return lambda t, x, v: eisenhart_rhs(config, SpreadState(t, x, v))
    if metric == "jacobi-generic":
        return lambda t, x, v: jacobi_rhs_generic(config, trajectory(config, t), SpreadState(t, x, v), floor)
    if metric == "jacobi-closed":
        return lambda t, x, v: jacobi_rhs_closed(config, t, SpreadState(t, x, v), floor=floor)
    raise InvalidParameterError(f"metric must be one of {METRICS}")


def initial_state(config: OscillatorConfig, params: IntegrationParams) -> SpreadState:
    n = config.n_osc
    if params.xi0_policy == "deterministic-basis":
        xi = np.zeros(n)
        xi[0] = 1.0
        xi_dot = np.zeros(n)
    else:
        rng = np.random.default_rng(params.seed)
        xi = rng.standard_normal(n)
        xi_dot = config.omega * rng.standard_normal(n)
    return replace(renormalize(SpreadState(0.0, xi, xi_dot), config.omega), log_norm=0.0)


def _integrate_python(
    config: OscillatorConfig,
    sched: Schedule,
    rhs: RhsFn,
    state: SpreadState,
    check_floor: bool,
):
    # reference loop; same grid, same bookkeeping as _kernel.integrate
    times, logs, arcs = [], [], []
    dt, h = sched.dt, 0.5 * sched.dt
    kin0 = trajectory(config, 0.0).kinetic
    min_kin = kin0
    if check_floor and kin0 <= sched.epsilon_t:
        return _kernel.SINGULAR, times, logs, arcs, kin0, 0.0, state
    arc = 0.0
    for step in range(sched.n_steps):
        t = step * dt
        t1 = (step + 1) * dt
        kinh = trajectory(config, t + h).kinetic
        kin1 = trajectory(config, t1).kinetic
        min_kin = min(min_kin, kinh, kin1)
        if check_floor and (kinh <= sched.epsilon_t or kin1 <= sched.epsilon_t):
            return _kernel.SINGULAR, times, logs, arcs, min_kin, (t + h if kinh <= sched.epsilon_t else t1), state
        try:
            state = step_rk4(rhs, SpreadState(t, state.xi, state.xi_dot, state.log_norm), dt)
        except NonFiniteStateError:
            return _kernel.DIVERGED, times, logs, arcs, min_kin, t1, state
        arc += dt * (kin0 + kin1)
        if np.max(np.abs(state.xi), initial=0.0) > _kernel.DIVERGENCE_BOUND or np.max(
            np.abs(state.xi_dot), initial=0.0
        ) > _kernel.DIVERGENCE_BOUND:
            return _kernel.DIVERGED, times, logs, arcs, min_kin, t1, state
        if (step + 1) % sched.renorm_every == 0 or step + 1 == sched.n_steps:
            state = renormalize(state, config.omega)
            times.append(t1)
            logs.append(state.log_norm)
            arcs.append(arc)
        kin0 = kin1
    return _kernel.OK, times, logs, arcs, min_kin, None, state


def estimate_lambda(
    config: OscillatorConfig,
    params: IntegrationParams | None = None,
    *,
    rhs: RhsFn | None = None,
    compiled: bool | None = None,
) -> LyapunovEstimate:
    """Estimate the largest geometric Lyapunov indicator for ``config``.

    Parameters
    ----------
    config : OscillatorConfig
        The oscillator ensemble.
    params : IntegrationParams, optional
        Integration settings; defaults to ``IntegrationParams()``.
    rhs : callable, optional
        Replaces the metric's spread equation with ``rhs(t, xi, xi_dot)``.
        No kinetic floor is enforced for a custom ``rhs``.
    compiled : bool, optional
        Use the compiled integrator (default unless ``rhs`` is given).
        The Python path is slower but shares no code with it.

    Returns
    -------
    LyapunovEstimate
        ``diverged`` is set, with a NaN exponent, when a component exceeds
        1e300 or becomes non-finite.

    Raises
    ------
    SingularKineticEnergyError
        The kinetic energy reached the floor under a Jacobi metric.
    """
    params = params or IntegrationParams()
    sched = params.schedule(config)
    state = initial_state(config, params)
    check_floor = rhs is None and params.metric != "eisenhart"
    if compiled is None:
        compiled = rhs is None
    if compiled and rhs is not None:
        raise InvalidParameterError("a custom rhs runs only on the Python path")

    if compiled:
        ratio = fluctuation_ratio(config.n_osc, config.phase_fraction)
        phi = TWO_PI * config.phase_fraction * (config.n_osc + 1) / config.n_osc
        status, _, times, logs, arcs, min_kin, abort_time, x, v = _kernel.integrate(
            _METRIC_CODES[params.metric],
            np.ascontiguousarray(config.theta, dtype=float),
            float(config.omega),
            float(config.amplitude),
            float(ratio),
            float(phi),
            float(config.mean_kinetic),
            float(sched.dt),
            int(sched.n_steps),
            int(sched.renorm_every),
            float(sched.epsilon_t),
            state.xi.copy(),
            state.xi_dot.copy(),
        )
        abort_time = None if math.isnan(abort_time) else float(abort_time)
        final = SpreadState(float(times[-1]) if len(times) else 0.0, x, v, float(logs[-1]) if len(logs) else 0.0)
    else:
        step_fn = rhs if rhs is not None else metric_rhs(config, params.metric, sched.epsilon_t)
        status, times, logs, arcs, min_kin, abort_time, final = _integrate_python(
            config, sched, step_fn, state, check_floor
        )

    times = np.asarray(times, dtype=float)
    logs = np.asarray(logs, dtype=float)
    arcs = np.asarray(arcs, dtype=float)
    if status == _kernel.SINGULAR:
        raise SingularKineticEnergyError(float(min_kin), float(abort_time), sched.epsilon_t)

    denom = arcs if params.lambda_units == "per-arc-length" else times
    series = np.column_stack([times, logs / denom]) if times.size else np.empty((0, 2))
    diverged = status == _kernel.DIVERGED
    if diverged:
        log.warning("spread diverged for %s at t=%s", config, abort_time)
    return LyapunovEstimate(
        exponent=math.nan if diverged else float(series[-1, 1]),
        series=series,
        renorm_count=int(times.size),
        min_kinetic=float(min_kin),
        arc_length_total=float(arcs[-1]) if arcs.size else 0.0,
        diverged=diverged,
        lambda_units=params.lambda_units,
        final_state=final,
        abort_time=abort_time,
    )


def lambda_series_tail_slope(estimate: LyapunovEstimate, tail_fraction: float = 0.5) -> float:
    """Least-squares slope of the running lambda over the last ``tail_fraction`` of the series."""
    series = estimate.series
    if len(series) < 10:
        raise InsufficientSeriesError(f"need at least 10 series entries, got {len(series)}")
    if not (0.0 < tail_fraction <= 1.0):
        raise InvalidParameterError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    n_tail = max(2, int(math.ceil(tail_fraction * len(series))))
    tail = series[-n_tail:]
    slope, _ = np.polyfit(tail[:, 0], tail[:, 1], 1)
    return float(slope)
