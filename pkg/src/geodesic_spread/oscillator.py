"""Uncoupled harmonic-oscillator ensemble: analytic trajectories and kinetic-energy statistics.

The ensemble has N identical oscillators with frequency ``omega`` and
amplitude ``C``; oscillator k starts with phase ``theta_k = k * 2*pi*f / N``
so the phases cover the fraction ``f`` of the phase circle.  The total
kinetic energy then oscillates at twice the oscillator frequency:

    T(t) = <T> * (1 - R * cos(2*omega*t + Phi)),   <T> = N * (omega*C/2)**2

with ``R = sin(2*pi*f) / (N * sin(2*pi*f/N))`` and
``Phi = 2*pi*f*(N+1)/N``.  The normalized variance of T is ``sigma = R**2 / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidParameterError

TWO_PI = 2.0 * math.pi

#: Default kinetic-energy floor, relative to the mean kinetic energy.
KINETIC_FLOOR_REL = 1e-12


def _sin_pi(x: float) -> float:
    """sin(pi*x) with exact zeros at integer x."""
    r = math.fmod(x, 2.0)
    if r == math.floor(r):
        return 0.0
    return math.sin(math.pi * r)


def _check_ensemble(n_osc: int, phase_fraction: float) -> None:
    if isinstance(n_osc, bool) or int(n_osc) != n_osc or n_osc < 1:
        raise InvalidParameterError(f"n_osc must be a positive integer, got {n_osc!r}")
    if not (0.0 <= phase_fraction <= 1.0):
        raise InvalidParameterError(f"phase_fraction must lie in [0, 1], got {phase_fraction!r}")


def phases(n_osc: int, phase_fraction: float) -> np.ndarray:
    """Initial phases ``theta_k = k * 2*pi*f / N`` for k = 1..N."""
    _check_ensemble(n_osc, phase_fraction)
    k = np.arange(1, n_osc + 1, dtype=float)
    return k * (TWO_PI * phase_fraction) / n_osc


@dataclass(frozen=True)
class OscillatorConfig:
    """Parameters of the oscillator ensemble.

    Parameters
    ----------
    n_osc : int
        Number of oscillators N.
    omega : float
        Angular frequency, > 0.
    amplitude : float
        Common amplitude C, > 0.
    phase_fraction : float
        Fraction f of the phase circle covered by the initial phases, in [0, 1].
    """

    n_osc: int
    omega: float = TWO_PI
    amplitude: float = 1.0
    phase_fraction: float = 0.0
    theta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        _check_ensemble(self.n_osc, self.phase_fraction)
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise InvalidParameterError(f"omega must be finite and > 0, got {self.omega!r}")
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise InvalidParameterError(f"amplitude must be finite and > 0, got {self.amplitude!r}")
        object.__setattr__(self, "n_osc", int(self.n_osc))
        theta = phases(self.n_osc, self.phase_fraction)
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @property
    def total_energy(self) -> float:
        """E = N * omega**2 * C**2 / 2."""
        return 0.5 * self.n_osc * (self.omega * self.amplitude) ** 2

    @property
    def mean_kinetic(self) -> float:
        """Time-averaged kinetic energy <T> = N * (omega*C/2)**2."""
        return self.n_osc * (0.5 * self.omega * self.amplitude) ** 2

    @property
    def period(self) -> float:
        """Oscillator period 2*pi/omega."""
        return TWO_PI / self.omega

    @property
    def fluctuation_period(self) -> float:
        """Period pi/omega of the kinetic-energy oscillation."""
        return math.pi / self.omega

    def kinetic_floor(self, rel: float = KINETIC_FLOOR_REL) -> float:
        return rel * self.mean_kinetic

    def potential(self, q: np.ndarray) -> float:
        return 0.5 * self.omega**2 * float(np.dot(q, q))


@dataclass(frozen=True)
class PhasePoint:
    """Instantaneous state of the ensemble on its analytic trajectory."""

    t: float
    q: np.ndarray
    q_dot: np.ndarray
    kinetic: float


class FluctuationStats(NamedTuple):
    sigma: float
    sigma_sqrt: float
    mean_kinetic: float
    mean_phase: float


class NumericFluctuation(NamedTuple):
    sigma: float
    abs_variance: float
    mean_kinetic: float


def trajectory(config: OscillatorConfig, t: float) -> PhasePoint:
    """Evaluate ``q_k = C cos(omega t + theta_k)`` and its velocity at time ``t``."""
    arg = config.omega * t + config.theta
    q = config.amplitude * np.cos(arg)
    q_dot = -config.amplitude * config.omega * np.sin(arg)
    return PhasePoint(t=float(t), q=q, q_dot=q_dot, kinetic=0.5 * float(np.dot(q_dot, q_dot)))


def kinetic_series(config: OscillatorConfig, times: np.ndarray) -> np.ndarray:
    """Kinetic energy 1/2 sum(q_dot**2) at each time, summed directly over oscillators."""
    times = np.asarray(times, dtype=float)
    arg = config.omega * times[..., None] + config.theta
    v = config.amplitude * config.omega * np.sin(arg)
    return 0.5 * np.einsum("...k,...k->...", v, v)


def fluctuation_ratio(n_osc: int, phase_fraction: float) -> float:
    """Signed modulation depth ``R = sin(2*pi*f) / (N sin(2*pi*f/N))`` of T(t).

    Where the denominator vanishes (2f/N an integer m) the analytic limit
    ``(-1)**(m*(N-1))`` is returned; this covers f = 0 and N = 1. The
    result is clipped to [-1, 1] against rounding.
    """
    _check_ensemble(n_osc, phase_fraction)
    x = 2.0 * phase_fraction / n_osc
    if x == math.floor(x):
        m = int(x)
        return -1.0 if (m * (n_osc - 1)) % 2 else 1.0
    r = _sin_pi(2.0 * phase_fraction) / (n_osc * _sin_pi(x))
    # |R| <= 1 exactly; the quotient can overshoot by an ulp near the limits
    return min(1.0, max(-1.0, r))


def sigma(
    n_osc: int,
    phase_fraction: float,
    *,
    omega: float = TWO_PI,
    amplitude: float = 1.0,
) -> FluctuationStats:
    """Normalized kinetic-energy variance (<T^2> - <T>^2) / <T>^2 in closed form.

    ``omega`` and ``amplitude`` only enter ``mean_kinetic``; sigma itself
    depends on N and f alone.
    """
    r = fluctuation_ratio(n_osc, phase_fraction)
    s = 0.5 * r * r
    mean_t = n_osc * (0.5 * omega * amplitude) ** 2
    phi = TWO_PI * phase_fraction * (n_osc + 1) / n_osc
    return FluctuationStats(sigma=s, sigma_sqrt=math.sqrt(s), mean_kinetic=mean_t, mean_phase=phi)


def kinetic_closed_form(config: OscillatorConfig, t: float) -> float:
    """T(t) = <T> (1 - R cos(2 omega t + Phi)).

    R carries its sign; ``|R| = sqrt(2 sigma)``.  For f in (1/2, 1) R is
    negative and using the unsigned root would flip the modulation.
    """
    r = fluctuation_ratio(config.n_osc, config.phase_fraction)
    phi = TWO_PI * config.phase_fraction * (config.n_osc + 1) / config.n_osc
    return config.mean_kinetic * (1.0 - r * math.cos(2.0 * config.omega * t + phi))


def sigma_numeric(config: OscillatorConfig, samples: int = 4096) -> NumericFluctuation:
    """Time-average estimate of sigma and the absolute variance of T.

    Samples T(t) on ``samples`` equally spaced points of one fluctuation
    period pi/omega, endpoint excluded.  T is a trigonometric polynomial
    of degree 2 in omega*t, so the average is exact up to rounding for
    any ``samples >= 5``.
    """
    if samples < 100:
        raise InvalidParameterError(f"samples must be >= 100, got {samples}")
    times = np.arange(samples) * (config.fluctuation_period / samples)
    kin = kinetic_series(config, times)
    mean = float(kin.mean())
    var = float(np.mean((kin - mean) ** 2))
    return NumericFluctuation(sigma=var / mean**2, abs_variance=var, mean_kinetic=mean)


def sigma_limit(phase_fraction: float) -> float:
    """N -> infinity limit of sigma: (sin(2*pi*f) / (sqrt(2) * 2*pi*f))**2.

    At f = 0 the sinc limit 1/2 is returned.
    """
    if not (0.0 <= phase_fraction <= 1.0):
        raise InvalidParameterError(f"phase_fraction must lie in [0, 1], got {phase_fraction!r}")
    if phase_fraction == 0.0:
        return 0.5
    r = _sin_pi(2.0 * phase_fraction) / (TWO_PI * phase_fraction)
    return 0.5 * r * r


def arc_length(config: OscillatorConfig, t: float, dt: float) -> float:
    """Jacobi-metric arc length s(t) = integral_0^t 2 T dt' (trapezoidal rule).

    The grid is 0, dt, 2 dt, ... with a shorter final panel when ``t`` is
    not a multiple of ``dt``.
    """
    if t < 0:
        raise InvalidParameterError(f"t must be >= 0, got {t}")
    if dt <= 0:
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    if t == 0:
        return 0.0
    n_full = int(math.floor(t / dt + 1e-9))
    grid = np.arange(n_full + 1) * dt
    grid = grid[grid <= t]
    if t - grid[-1] > 1e-12 * dt:
        grid = np.append(grid, t)
    else:
        grid[-1] = t
    two_t = 2.0 * kinetic_series(config, grid)
    return float(np.sum(0.5 * (two_t[1:] + two_t[:-1]) * np.diff(grid)))
