import math

import numpy as np
import pytest

from geodesic_spread import InvalidParameterError, OscillatorConfig, sigma_numeric
from geodesic_spread.experiments import (
    AUDIT_CONFIGS,
    FIG2_F,
    FIG2_N,
    FIG3_F,
    FIG4_OMEGA,
    SweepSpec,
    fig2_grid,
    run_audit,
    run_fig1,
    run_fig3,
    run_fig4,
    run_point,
    run_sweep,
)
from geodesic_spread.propagation import IntegrationParams

TWO_PI = 2 * math.pi
SHORT = IntegrationParams(t_max_periods=10)


def test_grids():
    assert FIG2_N == (3, 6, 11, 18, 27, 38, 51, 66, 83, 102, 123, 146, 171, 198)
    np.testing.assert_allclose(FIG2_F, np.arange(1, 10) * 0.05, rtol=1e-15)
    assert len(FIG3_F) == 25 and FIG3_F[0] == 0.01 and FIG3_F[-1] == 0.49
    np.testing.assert_allclose(FIG4_OMEGA, np.pi * np.arange(1, 11))
    assert len(fig2_grid()) == 126


def test_sweep_spec_validation():
    with pytest.raises(InvalidParameterError):
        SweepSpec(())
    with pytest.raises(InvalidParameterError):
        SweepSpec(((2, 0.1, TWO_PI), (2, 0.1, TWO_PI)))


# -- fig1 --------------------------------------------------------------------------


def test_fig1_table():
    res = run_fig1()
    assert len(res.rows) == 721
    f = res.column("f")
    s = res.column("sigma")
    assert f[0] == 0 and f[-1] == 1
    assert s[360] == 0.0  # f = 1/2
    assert s[0] == 0.5 and s.max() == 0.5
    assert np.all(np.isnan(res.column("lyapunov")))


def test_fig1_matches_time_average():
    res = run_fig1()
    for row in res.rows[::40]:
        num = sigma_numeric(OscillatorConfig(10, phase_fraction=row.f), 20_000)
        assert row.sigma == pytest.approx(num.sigma, rel=1e-6, abs=1e-12)
        assert row.abs_variance == pytest.approx(num.abs_variance, rel=1e-6, abs=1e-9)


def test_fig1_not_mirror_symmetric_for_finite_n():
    # sin(2 pi f / N) breaks the f <-> 1 - f parity; the time-average oracle agrees
    res = run_fig1()
    s = res.column("sigma")
    assert s[72] == pytest.approx(sigma_numeric(OscillatorConfig(10, phase_fraction=0.1)).sigma, rel=1e-9)
    assert s[648] == pytest.approx(sigma_numeric(OscillatorConfig(10, phase_fraction=0.9)).sigma, rel=1e-9)
    assert s[72] > 0.4 and s[648] < 0.01


# -- integration sweeps ----------------------------------------------------------------


def test_run_point_row():
    row = run_point((3, 0.3, TWO_PI), SHORT)
    assert row.key == (3, 0.3, TWO_PI)
    assert row.sqrt_sigma == pytest.approx(math.sqrt(row.sigma))
    assert row.renorm_count == 10
    assert not row.diverged and row.error is None
    assert math.isfinite(row.lyapunov)


def test_run_point_singular_recorded():
    row = run_point((4, 0.0, TWO_PI), SHORT)
    assert row.diverged
    assert math.isnan(row.lyapunov)
    assert row.min_kinetic == 0.0
    assert "singular" in row.error


def test_sweep_rows_sorted():
    grid = ((6, 0.3, TWO_PI), (3, 0.45, TWO_PI), (3, 0.1, TWO_PI))
    res = run_sweep(SweepSpec(grid, SHORT, "t"))
    assert [r.key for r in res.rows] == sorted(grid)


def test_sweep_continues_past_failures():
    grid = ((3, 0.0, TWO_PI), (3, 0.2, TWO_PI))
    res = run_sweep(SweepSpec(grid, SHORT, "t"))
    assert len(res.rows) == 2
    assert [r.key for r in res.failures] == [(3, 0.0, TWO_PI)]


def test_parallel_matches_serial():
    grid = tuple((n, f, TWO_PI) for n in (3, 6) for f in (0.1, 0.3))
    a = run_sweep(SweepSpec(grid, SHORT, "t"), workers=1)
    b = run_sweep(SweepSpec(grid, SHORT, "t"), workers=2)
    for ra, rb in zip(a.rows, b.rows):
        assert ra.key == rb.key
        assert ra.lyapunov == rb.lyapunov
        assert ra.abs_variance == rb.abs_variance


def test_fig3_small():
    res = run_fig3(f_grid=(0.05, 0.25, 0.5), params=SHORT)
    assert [r.n_osc for r in res.rows] == [2, 2, 2]
    assert abs(res.rows[-1].abs_variance) <= 1e-10
    lam = res.column("lyapunov")
    assert lam[0] == lam.max()


def test_fig4_small():
    res = run_fig4(omega_grid=(math.pi, 2 * math.pi), params=SHORT)
    assert np.all(res.column("sigma") == 0.0)
    lam = res.column("lyapunov")
    assert np.all(lam > 0)
    assert lam[1] == pytest.approx(2 * lam[0], rel=1e-9)


def test_metric_forced_by_figure():
    res = run_fig4(omega_grid=(TWO_PI,), params=IntegrationParams(t_max_periods=10, metric="eisenhart"))
    assert res.params.metric == "jacobi-generic"


# -- audit ------------------------------------------------------------------------------------


def test_audit_rows():
    rows = run_audit(samples=20, trials=1, seed=0)
    assert len(rows) == len(AUDIT_CONFIGS)
    for r in rows:
        assert r.samples + r.skipped == 20
        assert r.max_i_block <= 1e-12
        assert r.max_j_block <= 1e-12
        assert r.max_k_block > 0
        assert r.max_total_derived <= 1e-10


def test_audit_deterministic():
    assert run_audit(samples=5, seed=3) == run_audit(samples=5, seed=3)
