import math

import numpy as np
import pytest

from geodesic_spread import (
    DimensionMismatchError,
    OscillatorConfig,
    SingularKineticEnergyError,
    SpreadState,
    compare_rhs,
    couplings,
    eisenhart_rhs,
    jacobi_rhs_closed,
    jacobi_rhs_generic,
    trajectory,
)
from geodesic_spread.spread import generic_blocks

TWO_PI = 2 * math.pi


def _state(xi, xi_dot, t=0.0):
    return SpreadState(t=t, xi=np.asarray(xi, float), xi_dot=np.asarray(xi_dot, float))


def _unit_state(rng, n, t=0.0):
    v = rng.standard_normal(2 * n)
    v /= np.linalg.norm(v)
    return _state(v[:n], v[n:], t)


def _loop_oracle(config, point, state):
    """Index-by-index evaluation of the tensor equation with explicit Kronecker deltas."""
    n = config.n_osc
    w2 = config.omega**2
    q, qd, kin = point.q, point.q_dot, point.kinetic
    xi, xid = state.xi, state.xi_dot
    out = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for l in range(n):
            for j in range(n):
                if l != j:
                    continue
                inner = 0.0
                for i in range(n):
                    for m in range(n):
                        if i == m:
                            inner += qd[i] * q[m]
                acc += (q[k] * qd[l] - q[l] * qd[k]) * xid[j]
                acc += (w2 * q[k] * q[l] - qd[k] * qd[l] - (w2 / kin) * inner * qd[k] * q[l]) * xi[j]
        out[k] = -w2 * xi[k] - (w2 / kin) * acc
    return out


# -- state --------------------------------------------------------------------------


def test_state_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        _state([1.0, 2.0], [0.0])


def test_state_dimension_must_match_config():
    with pytest.raises(DimensionMismatchError):
        eisenhart_rhs(OscillatorConfig(3), _state([1.0, 0.0], [0.0, 0.0]))


def test_state_finite_flag():
    assert _state([1.0], [0.0]).is_finite()
    assert not _state([math.nan], [0.0]).is_finite()


# -- eisenhart -----------------------------------------------------------------------


def test_eisenhart_unit_vector():
    out = eisenhart_rhs(OscillatorConfig(3), _state([1, 0, 0], [5.0, -2.0, 7.0]))
    np.testing.assert_allclose(out, [-4 * math.pi**2, 0, 0], rtol=1e-15)


def test_eisenhart_zero():
    assert np.array_equal(eisenhart_rhs(OscillatorConfig(4, omega=3.7), _state(np.zeros(4), np.ones(4))), np.zeros(4))


def test_eisenhart_unit_frequency():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal(2)
    out = eisenhart_rhs(OscillatorConfig(2, omega=1.0), _state([a, b], rng.standard_normal(2)))
    assert np.array_equal(out, [-a, -b])


# -- generic jacobi --------------------------------------------------------------------


def test_generic_single_oscillator_hand_value():
    c = OscillatorConfig(1, phase_fraction=0.25)
    point = trajectory(c, 0.0)  # omega t + theta = pi/2
    assert point.kinetic == pytest.approx(2 * math.pi**2)
    out = jacobi_rhs_generic(c, point, _state([1.0], [0.0]))
    assert out[0] == pytest.approx(4 * math.pi**2, rel=1e-12)


def test_generic_single_oscillator_reduction():
    # N = 1 collapses to xi'' = w^2 (1 + 2 w^2 q^2 / qdot^2) xi for any t
    c = OscillatorConfig(1, omega=2.3, amplitude=1.4, phase_fraction=0.6)
    for t in np.linspace(0.05, 2.0, 17):
        point = trajectory(c, t)
        expected = c.omega**2 * (1 + 2 * c.omega**2 * point.q[0] ** 2 / point.q_dot[0] ** 2)
        out = jacobi_rhs_generic(c, point, _state([1.0], [0.0]))
        assert out[0] == pytest.approx(expected, rel=1e-10)


def test_generic_matches_loop_oracle():
    rng = np.random.default_rng(3)
    for _ in range(40):
        c = OscillatorConfig(
            int(rng.integers(1, 7)),
            omega=float(rng.uniform(0.5, 10)),
            amplitude=float(rng.uniform(0.3, 2)),
            phase_fraction=float(rng.uniform(0.05, 0.95)),
        )
        t = float(rng.uniform(0, 5))
        point = trajectory(c, t)
        state = _unit_state(rng, c.n_osc, t)
        got = jacobi_rhs_generic(c, point, state)
        ref = _loop_oracle(c, point, state)
        assert np.linalg.norm(got - ref) <= 1e-11 * np.linalg.norm(ref)


def test_generic_singular_kinetic():
    c = OscillatorConfig(2, phase_fraction=0.0)
    with pytest.raises(SingularKineticEnergyError) as err:
        jacobi_rhs_generic(c, trajectory(c, 0.0), _state([1.0, 0.0], [0.0, 0.0]))
    assert err.value.kinetic == 0.0


def test_generic_velocity_block_does_no_work_at_rest():
    # f = 1: T constant; at xi_dot = 0 the xi_dot coupling has nothing to act on
    rng = np.random.default_rng(4)
    c = OscillatorConfig(10, phase_fraction=1.0)
    for t in rng.uniform(0, 1, 10):
        state = _state(rng.standard_normal(10), np.zeros(10), t)
        i_b, _, _ = generic_blocks(c, trajectory(c, t), state)
        assert float(np.dot(state.xi, i_b)) == 0.0


def test_generic_matches_closed_with_substituted_k():
    c = OscillatorConfig(3, phase_fraction=0.3)
    rng = np.random.default_rng(5)
    for _ in range(20):
        state = _unit_state(rng, 3, 0.137)
        generic = jacobi_rhs_generic(c, trajectory(c, 0.137), state)
        closed = jacobi_rhs_closed(c, 0.137, state, k_form="derived")
        assert np.linalg.norm(generic - closed) <= 1e-10 * np.linalg.norm(generic)


def test_generic_matches_closed_with_substituted_k_random_configs():
    rng = np.random.default_rng(6)
    for _ in range(100):
        c = OscillatorConfig(
            int(rng.integers(1, 40)),
            omega=float(rng.uniform(0.5, 20)),
            amplitude=float(rng.uniform(0.3, 2)),
            phase_fraction=float(rng.uniform(0.02, 0.98)),
        )
        t = float(rng.uniform(0, 10))
        if trajectory(c, t).kinetic < 1e-3 * c.mean_kinetic:
            continue
        state = _unit_state(rng, c.n_osc, t)
        generic = jacobi_rhs_generic(c, trajectory(c, t), state)
        closed = jacobi_rhs_closed(c, t, state, k_form="derived")
        assert np.linalg.norm(generic - closed) <= 1e-10 * np.linalg.norm(generic)


# -- couplings ----------------------------------------------------------------------------


def test_couplings_zero_diagonal():
    m = couplings(OscillatorConfig(7, phase_fraction=0.4), 0.3)
    assert np.array_equal(np.diag(m.i_mat), np.zeros(7))


def test_couplings_two_oscillator_antisymmetry():
    c = OscillatorConfig(2, phase_fraction=0.25)
    m = couplings(c, 0.0)
    kin = c.mean_kinetic * (1 - (math.sin(math.pi / 2) / (2 * math.sin(math.pi / 4))) * math.cos(3 * math.pi / 4))
    assert m.kinetic == pytest.approx(kin, rel=1e-14)
    expected = c.omega**2 / kin * math.sin(math.pi / 4 - math.pi / 2)
    assert m.i_mat[0, 1] < 0
    assert m.i_mat[0, 1] == pytest.approx(expected, rel=1e-14)
    assert m.i_mat[1, 0] == -m.i_mat[0, 1]


def test_couplings_constant_kinetic_energy():
    c = OscillatorConfig(10, phase_fraction=1.0)
    w2c2 = c.omega**2 * c.amplitude**2
    for t in (0.0, 0.11, 0.5, 3.3):
        m = couplings(c, t)
        assert m.kinetic == pytest.approx(10 * (c.omega / 2) ** 2, rel=1e-14)
        th = c.theta
        np.testing.assert_allclose(
            m.j_mat, w2c2 / m.kinetic * np.cos(2 * c.omega * t + th[:, None] + th[None, :]), rtol=1e-12, atol=1e-14
        )


def test_couplings_printed_k_formula():
    c = OscillatorConfig(4, omega=3.0, amplitude=1.5, phase_fraction=0.35)
    t = 0.42
    m = couplings(c, t)
    th = c.theta
    phi = TWO_PI * 0.35 * 5 / 4
    pref = -(c.omega**4 * c.amplitude**4) / (2 * m.kinetic**2) * math.sin(2 * c.omega * t + phi)
    for k in range(4):
        for j in range(4):
            ref = pref * (math.sin(2 * c.omega * t + th[k] + th[j]) - math.sin(th[k] - th[j]))
            assert m.k_mat[k, j] == pytest.approx(ref, rel=1e-12, abs=1e-14)


def test_couplings_unknown_form():
    with pytest.raises(ValueError):
        couplings(OscillatorConfig(2, phase_fraction=0.3), 0.1, k_form="other")


def test_couplings_singular():
    with pytest.raises(SingularKineticEnergyError):
        couplings(OscillatorConfig(3, phase_fraction=0.0), 0.0)


def test_coupling_symmetries_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        c = OscillatorConfig(
            int(rng.integers(2, 50)),
            omega=float(rng.uniform(0.5, 20)),
            phase_fraction=float(rng.uniform(0.02, 0.98)),
        )
        t = float(rng.uniform(0, 10))
        if trajectory(c, t).kinetic <= c.kinetic_floor():
            continue
        m = couplings(c, t)
        assert np.max(np.abs(m.i_mat + m.i_mat.T)) <= 1e-12 * np.max(np.abs(m.i_mat))
        assert np.max(np.abs(m.j_mat - m.j_mat.T)) <= 1e-12 * np.max(np.abs(m.j_mat))


# -- closed-form rhs ----------------------------------------------------------------------


def test_closed_zero_state():
    c = OscillatorConfig(5, phase_fraction=0.3)
    assert np.array_equal(jacobi_rhs_closed(c, 0.2, _state(np.zeros(5), np.zeros(5))), np.zeros(5))


def test_closed_constant_kinetic_form():
    rng = np.random.default_rng(8)
    c = OscillatorConfig(10, phase_fraction=1.0)
    xi = rng.standard_normal(10)
    t = 0.3
    m = couplings(c, t)
    out = jacobi_rhs_closed(c, t, _state(xi, np.zeros(10)))
    ref = -(c.omega**2) * xi - c.omega**2 * (m.j_mat + m.k_mat) @ xi
    np.testing.assert_allclose(out, ref, rtol=1e-13, atol=1e-12)
    assert np.all(np.isfinite(m.k_mat))


def test_closed_scaled_to_eisenhart():
    rng = np.random.default_rng(9)
    c = OscillatorConfig(6, phase_fraction=0.2)
    for t in rng.uniform(0, 2, 10):
        state = _unit_state(rng, 6, t)
        assert np.array_equal(jacobi_rhs_closed(c, t, state, coupling_scale=0.0), eisenhart_rhs(c, state))


@pytest.mark.parametrize("which", ["generic", "closed"])
def test_rhs_linearity(which):
    rng = np.random.default_rng(10)
    for _ in range(50):
        c = OscillatorConfig(int(rng.integers(1, 20)), phase_fraction=float(rng.uniform(0.05, 0.95)))
        t = float(rng.uniform(0, 3))
        if trajectory(c, t).kinetic < 1e-6 * c.mean_kinetic:
            continue
        s1, s2 = _unit_state(rng, c.n_osc, t), _unit_state(rng, c.n_osc, t)
        a, b = rng.standard_normal(2)
        mix = _state(a * s1.xi + b * s2.xi, a * s1.xi_dot + b * s2.xi_dot, t)
        if which == "generic":
            point = trajectory(c, t)

            def rhs(s):
                return jacobi_rhs_generic(c, point, s)
        else:

            def rhs(s):
                return jacobi_rhs_closed(c, t, s)

        lhs = rhs(mix)
        combo = a * rhs(s1) + b * rhs(s2)
        scale = abs(a) * np.linalg.norm(rhs(s1)) + abs(b) * np.linalg.norm(rhs(s2))
        assert np.linalg.norm(lhs - combo) <= 1e-12 * scale


# -- audit ---------------------------------------------------------------------------------


def test_compare_rhs_blocks():
    c = OscillatorConfig(3, phase_fraction=0.3)
    rng = np.random.default_rng(11)
    report = compare_rhs(c, rng.uniform(0, 1, 30), trials=3, seed=1)
    assert report.samples == 90
    assert report.skipped == 0
    assert report.i_block <= 1e-12
    assert report.j_block <= 1e-12
    assert report.k_block > 1e-3
    assert report.k_block_derived <= 1e-10
    assert report.total_derived <= 1e-10
    assert report.total > 1e-3


def test_compare_rhs_skips_singular_times():
    c = OscillatorConfig(4, phase_fraction=0.0)
    report = compare_rhs(c, [0.0, 0.5, 0.1], trials=2)
    assert report.skipped == 2
    assert report.samples == 2
