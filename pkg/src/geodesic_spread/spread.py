"""Geodesic-spread accelerations for the Eisenhart and Jacobi metrics.

Each evaluator returns d^2 xi / dt^2 for the spread vector ``xi`` along the
analytic trajectory of the oscillator ensemble.

* Eisenhart: the tangent dynamics, ``xi'' = -omega^2 xi``.
* Jacobi, generic: the full spread equation written in terms of q, q_dot
  and T, with mixing terms carrying 1/T and 1/T^2.
* Jacobi, closed form: the same equation after substituting the analytic
  trajectory, organized through three N x N couplings I, J, K:

      xi'' = -omega^2 xi - omega I xi' - omega^2 (J + K) xi

The printed K coupling and the one obtained by substituting the
trajectory into the generic equation differ (prefactor, a factor
N*R, and the sign of the sin(theta_k - theta_j) term).  Both are
available through ``k_form``; ``compare_rhs`` measures the gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DimensionMismatchError, SingularKineticEnergyError
from .oscillator import (
    TWO_PI,
    OscillatorConfig,
    PhasePoint,
    fluctuation_ratio,
    kinetic_closed_form,
    trajectory,
)

KForm = Literal["printed", "derived"]


@dataclass(frozen=True)
class SpreadState:
    """Spread vector, its time derivative, and the accumulated log of renormalizations."""

    t: float
    xi: np.ndarray
    xi_dot: np.ndarray
    log_norm: float = 0.0

    def __post_init__(self) -> None:
        xi = np.asarray(self.xi, dtype=float)
        xi_dot = np.asarray(self.xi_dot, dtype=float)
        if xi.ndim != 1 or xi.shape != xi_dot.shape:
            raise DimensionMismatchError(
                f"xi and xi_dot must be 1-d of equal length, got {xi.shape} and {xi_dot.shape}"
            )
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "xi_dot", xi_dot)

    @property
    def dim(self) -> int:
        return self.xi.size

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.xi)) and np.all(np.isfinite(self.xi_dot)))


@dataclass(frozen=True)
class CouplingMatrices:
    """The I, J, K couplings at time ``t``; entries carry the 1/T and 1/T^2 factors."""

    i_mat: np.ndarray
    j_mat: np.ndarray
    k_mat: np.ndarray
    t: float
    kinetic: float


def _check_dim(config: OscillatorConfig, state: SpreadState) -> None:
    if state.dim != config.n_osc:
        raise DimensionMismatchError(
            f"spread state has dimension {state.dim}, ensemble has {config.n_osc} oscillators"
        )


def _floor(config: OscillatorConfig, floor: float | None) -> float:
    return config.kinetic_floor() if floor is None else floor


def eisenhart_rhs(config: OscillatorConfig, state: SpreadState) -> np.ndarray:
    _check_dim(config, state)
    return -(config.omega**2) * state.xi


def generic_blocks(
    config: OscillatorConfig, point: PhasePoint, state: SpreadState, floor: float | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mixing-term contributions to the Jacobi spread acceleration.

    Returns the xi_dot coupling, the xi coupling without the 1/T^2 part,
    and the 1/T^2 part, each already moved to the right-hand side.  All
    sums over oscillator indices are rank-one contractions, so nothing
    N x N is formed.
    """
    _check_dim(config, state)
    if point.kinetic <= _floor(config, floor):
        raise SingularKineticEnergyError(point.kinetic, point.t, _floor(config, floor))
    w2 = config.omega**2
    q, qd = point.q, point.q_dot
    xi, xid = state.xi, state.xi_dot
    a = w2 / point.kinetic
    # sum_j (q_k qd_j - q_j qd_k) xid_j
    i_term = q * np.dot(qd, xid) - qd * np.dot(q, xid)
    # sum_j (w2 q_k q_j - qd_k qd_j) xi_j
    j_term = w2 * q * np.dot(q, xi) - qd * np.dot(qd, xi)
    # (w2/T) (sum_m qd_m q_m) sum_j qd_k q_j xi_j
    k_term = -a * np.dot(qd, q) * qd * np.dot(q, xi)
    return -a * i_term, -a * j_term, -a * k_term


def jacobi_rhs_generic(
    config: OscillatorConfig,
    point: PhasePoint,
    state: SpreadState,
    floor: float | None = None,
) -> np.ndarray:
    """Jacobi-metric spread acceleration from q, q_dot and T at ``point``.

    Raises SingularKineticEnergyError when ``point.kinetic`` is at or
    below the floor (default ``1e-12 * <T>``).
    """
    i_b, j_b, k_b = generic_blocks(config, point, state, floor)
    return -(config.omega**2) * state.xi + i_b + j_b + k_b


def couplings(
    config: OscillatorConfig,
    t: float,
    *,
    k_form: KForm = "printed",
    floor: float | None = None,
) -> CouplingMatrices:
    """Dense I, J, K coupling matrices at time ``t``.

    T is taken from the closed-form kinetic energy.  ``k_form="printed"``
    gives K as published; ``"derived"`` gives the K that follows from
    substituting the analytic trajectory into the generic equation.
    """
    kin = kinetic_closed_form(config, t)
    if kin <= _floor(config, floor):
        raise SingularKineticEnergyError(kin, t, _floor(config, floor))
    w, c2 = config.omega, config.amplitude**2
    th = config.theta
    diff = th[:, None] - th[None, :]
    summ = 2.0 * w * t + th[:, None] + th[None, :]
    scale = w**2 * c2 / kin
    i_mat = scale * np.sin(diff)
    np.fill_diagonal(i_mat, 0.0)
    j_mat = scale * np.cos(summ)
    phi = TWO_PI * config.phase_fraction * (config.n_osc + 1) / config.n_osc
    drive = math.sin(2.0 * w * t + phi)
    if k_form == "printed":
        k_mat = -(w**4 * c2**2 / (2.0 * kin**2)) * drive * (np.sin(summ) - np.sin(diff))
    elif k_form == "derived":
        nr = config.n_osc * fluctuation_ratio(config.n_osc, config.phase_fraction)
        k_mat = -(w**4 * c2**2 / (4.0 * kin**2)) * nr * drive * (np.sin(summ) + np.sin(diff))
    else:
        raise ValueError(f"unknown k_form {k_form!r}")
    return CouplingMatrices(i_mat=i_mat, j_mat=j_mat, k_mat=k_mat, t=float(t), kinetic=kin)


def jacobi_rhs_closed(
    config: OscillatorConfig,
    t: float,
    state: SpreadState,
    *,
    k_form: KForm = "printed",
    coupling_scale: float = 1.0,
    floor: float | None = None,
) -> np.ndarray:
    """xi'' = -omega^2 xi - omega I xi' - omega^2 (J + K) xi.

    ``coupling_scale`` multiplies all three couplings; at 0 this is the
    Eisenhart equation.
    """
    _check_dim(config, state)
    m = couplings(config, t, k_form=k_form, floor=floor)
    w = config.omega
    return (
        -(w**2) * state.xi
        - coupling_scale * w * (m.i_mat @ state.xi_dot)
        - coupling_scale * w**2 * ((m.j_mat + m.k_mat) @ state.xi)
    )


@dataclass(frozen=True)
class RhsComparison:
    """Largest deviations between the generic and closed-form Jacobi accelerations.

    Every deviation is ``||delta|| / ||rhs_generic||`` maximized over the
    sampled (time, state) pairs.  ``k_block`` uses the printed K and
    ``k_block_derived`` the substituted one.
    """

    total: float
    i_block: float
    j_block: float
    k_block: float
    k_block_derived: float
    total_derived: float
    samples: int
    skipped: int


def compare_rhs(
    config: OscillatorConfig,
    sample_times: list[float] | np.ndarray,
    trials: int,
    seed: int = 0,
    floor: float | None = None,
) -> RhsComparison:
    """Evaluate both Jacobi forms on identical random unit states and report block deviations.

    Sample times whose kinetic energy is at or below the floor are
    skipped and counted.
    """
    rng = np.random.default_rng(seed)
    w = config.omega
    worst = dict(total=0.0, i=0.0, j=0.0, k=0.0, kd=0.0, total_d=0.0)
    samples = skipped = 0
    for t in sample_times:
        point = trajectory(config, t)
        try:
            printed = couplings(config, t, floor=floor)
            derived = couplings(config, t, k_form="derived", floor=floor)
            if point.kinetic <= _floor(config, floor):
                raise SingularKineticEnergyError(point.kinetic, t)
        except SingularKineticEnergyError:
            skipped += 1
            continue
        for _ in range(trials):
            v = rng.standard_normal(2 * config.n_osc)
            v /= np.linalg.norm(v)
            state = SpreadState(t=t, xi=v[: config.n_osc], xi_dot=v[config.n_osc :])
            i_b, j_b, k_b = generic_blocks(config, point, state, floor)
            generic = -(w**2) * state.xi + i_b + j_b + k_b
            ref = np.linalg.norm(generic)
            ci = -w * (printed.i_mat @ state.xi_dot)
            cj = -(w**2) * (printed.j_mat @ state.xi)
            ck = -(w**2) * (printed.k_mat @ state.xi)
            ckd = -(w**2) * (derived.k_mat @ state.xi)
            closed = -(w**2) * state.xi + ci + cj + ck
            closed_d = -(w**2) * state.xi + ci + cj + ckd
            for key, delta in (
                ("total", generic - closed),
                ("i", i_b - ci),
                ("j", j_b - cj),
                ("k", k_b - ck),
                ("kd", k_b - ckd),
                ("total_d", generic - closed_d),
            ):
                worst[key] = max(worst[key], float(np.linalg.norm(delta) / ref))
            samples += 1
    return RhsComparison(
        total=worst["total"],
        i_block=worst["i"],
        j_block=worst["j"],
        k_block=worst["k"],
        k_block_derived=worst["kd"],
        total_derived=worst["total_d"],
        samples=samples,
        skipped=skipped,
    )
