"""Parameter sweeps behind the four figures, the Eisenhart control, and the coupling audit.

Sweep points are independent; ``run_sweep`` optionally fans them out over
worker processes and always returns rows sorted by (n_osc, f, omega), so
output does not depend on the worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError, SingularKineticEnergyError
from .oscillator import TWO_PI, OscillatorConfig, fluctuation_ratio, sigma, sigma_numeric
from .propagation import IntegrationParams, LyapunovEstimate, estimate_lambda
from .spread import compare_rhs

GridPoint = tuple[int, float, float]

FIG2_N = tuple(2 + j * j for j in range(1, 15))
FIG2_F = tuple(i / 20 for i in range(1, 10))
FIG3_F = tuple((2 * i + 1) / 100 for i in range(25))
FIG4_OMEGA = tuple(k * math.pi for k in range(1, 11))
FIG1_STEPS = 720

VARIANCE_SAMPLES = 4096


@dataclass(frozen=True)
class SweepSpec:
    grid: tuple[GridPoint, ...]
    params: IntegrationParams = field(default_factory=IntegrationParams)
    label: str = "sweep"

    def __post_init__(self) -> None:
        grid = tuple((int(n), float(f), float(w)) for n, f, w in self.grid)
        if not grid:
            raise InvalidParameterError("sweep grid is empty")
        if len(set(grid)) != len(grid):
            raise InvalidParameterError("sweep grid has duplicate points")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class SweepRow:
    n_osc: int
    f: float
    omega: float
    sigma: float
    sqrt_sigma: float
    abs_variance: float
    lyapunov: float
    renorm_count: int
    min_kinetic: float
    diverged: bool
    runtime: float
    error: str | None = None

    @property
    def key(self) -> GridPoint:
        return (self.n_osc, self.f, self.omega)


@dataclass
class SweepResult:
    label: str
    rows: list[SweepRow]
    params: IntegrationParams | None = None
    wall_time: float = 0.0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def failures(self) -> list[SweepRow]:
        return [r for r in self.rows if r.diverged]


def run_point(point: GridPoint, params: IntegrationParams) -> SweepRow:
    """Fluctuation statistics and the Lyapunov indicator at one grid point.

    A singular-kinetic abort or a divergence is recorded in the row
    (``diverged`` set, NaN exponent) rather than raised.
    """
    n, f, w = point
    start = time.perf_counter()
    config = OscillatorConfig(n_osc=n, omega=w, phase_fraction=f)
    try:
        est: LyapunovEstimate | SingularKineticEnergyError = estimate_lambda(config, params)
    except SingularKineticEnergyError as exc:
        est = exc
    return point_row(config, est, start)


def point_row(
    config: OscillatorConfig,
    est: LyapunovEstimate | SingularKineticEnergyError,
    start: float,
) -> SweepRow:
    """Assemble a sweep row from an estimate, or from the singular abort that replaced it."""
    n, f, w = config.n_osc, config.phase_fraction, config.omega
    stats = sigma(n, f, omega=w)
    var = sigma_numeric(config, VARIANCE_SAMPLES).abs_variance
    if isinstance(est, SingularKineticEnergyError):
        lam, count, min_kin, diverged = math.nan, 0, est.kinetic, True
        error: str | None = f"singular kinetic energy: {est}"
    else:
        lam, count, min_kin, diverged = est.exponent, est.renorm_count, est.min_kinetic, est.diverged
        error = f"diverged at t={est.abort_time}" if diverged else None
    return SweepRow(
        n_osc=n,
        f=f,
        omega=w,
        sigma=stats.sigma,
        sqrt_sigma=stats.sigma_sqrt,
        abs_variance=var,
        lyapunov=lam,
        renorm_count=count,
        min_kinetic=min_kin,
        diverged=diverged,
        runtime=time.perf_counter() - start,
        error=error,
    )


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    start = time.perf_counter()
    work = partial(run_point, params=spec.params)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(work, spec.grid))
    else:
        rows = [work(p) for p in spec.grid]
    rows.sort(key=lambda r: r.key)
    return SweepResult(spec.label, rows, spec.params, time.perf_counter() - start)


def fig2_grid(omega: float = TWO_PI) -> tuple[GridPoint, ...]:
    return tuple((n, f, omega) for n in FIG2_N for f in FIG2_F)


def run_fig1(n_osc: int = 10, omega: float = TWO_PI) -> SweepResult:
    """Closed-form sigma over f = 0, 1/720, ..., 1 (no integration)."""
    start = time.perf_counter()
    rows = []
    for i in range(FIG1_STEPS + 1):
        f = i / FIG1_STEPS
        t0 = time.perf_counter()
        stats = sigma(n_osc, f, omega=omega)
        r = fluctuation_ratio(n_osc, f)
        rows.append(
            SweepRow(
                n_osc=n_osc,
                f=f,
                omega=omega,
                sigma=stats.sigma,
                sqrt_sigma=stats.sigma_sqrt,
                abs_variance=stats.sigma * stats.mean_kinetic**2,
                lyapunov=math.nan,
                renorm_count=0,
                min_kinetic=stats.mean_kinetic * (1.0 - abs(r)),
                diverged=False,
                runtime=time.perf_counter() - t0,
            )
        )
    return SweepResult("fig1", rows, None, time.perf_counter() - start)


def run_fig2(params: IntegrationParams | None = None, workers: int = 1) -> SweepResult:
    """Jacobi indicator over N = 2 + j^2 (j = 1..14) and f = 0.05..0.45."""
    params = replace(params or IntegrationParams(), metric="jacobi-generic")
    return run_sweep(SweepSpec(fig2_grid(), params, "fig2"), workers)


def run_fig3(
    f_grid: Sequence[float] = FIG3_F,
    params: IntegrationParams | None = None,
    workers: int = 1,
) -> SweepResult:
    """Two oscillators: Jacobi indicator and absolute kinetic variance against f."""
    params = replace(params or IntegrationParams(), metric="jacobi-generic")
    grid = tuple((2, float(f), TWO_PI) for f in f_grid)
    return run_sweep(SweepSpec(grid, params, "fig3"), workers)


def run_fig4(
    omega_grid: Sequence[float] = FIG4_OMEGA,
    params: IntegrationParams | None = None,
    workers: int = 1,
) -> SweepResult:
    """N = 10, f = 1 (sigma = 0): Jacobi indicator against omega."""
    params = replace(params or IntegrationParams(), metric="jacobi-generic")
    grid = tuple((10, 1.0, float(w)) for w in omega_grid)
    return run_sweep(SweepSpec(grid, params, "fig4"), workers)


def run_eisenhart_control(params: IntegrationParams | None = None, workers: int = 1) -> SweepResult:
    """The Fig. 2 grid under the Eisenhart metric."""
    params = replace(params or IntegrationParams(), metric="eisenhart")
    return run_sweep(SweepSpec(fig2_grid(), params, "eisenhart-control"), workers)


@dataclass(frozen=True)
class AuditRow:
    n_osc: int
    f: float
    omega: float
    samples: int
    skipped: int
    max_total: float
    max_i_block: float
    max_j_block: float
    max_k_block: float
    max_k_block_derived: float
    max_total_derived: float


AUDIT_CONFIGS: tuple[GridPoint, ...] = (
    (2, 0.25, TWO_PI),
    (3, 0.3, TWO_PI),
    (5, 0.1, TWO_PI),
    (10, 0.45, TWO_PI),
    (20, 0.2, 3 * math.pi),
)


def run_audit(
    configs: Sequence[GridPoint] = AUDIT_CONFIGS,
    samples: int = 20,
    trials: int = 1,
    seed: int = 0,
) -> list[AuditRow]:
    """Block-wise deviation between the generic and closed-form Jacobi equations per config.

    ``samples`` random times in one oscillator period, ``trials`` random
    unit states at each.
    """
    rng = np.random.default_rng(seed)
    out = []
    for n, f, w in configs:
        config = OscillatorConfig(n_osc=n, omega=w, phase_fraction=f)
        times = rng.uniform(0.0, config.period, samples)
        cmp = compare_rhs(config, times, trials, seed=int(rng.integers(2**31)))
        out.append(
            AuditRow(
                n_osc=n,
                f=f,
                omega=w,
                samples=cmp.samples,
                skipped=cmp.skipped,
                max_total=cmp.total,
                max_i_block=cmp.i_block,
                max_j_block=cmp.j_block,
                max_k_block=cmp.k_block,
                max_k_block_derived=cmp.k_block_derived,
                max_total_derived=cmp.total_derived,
            )
        )
    return out
