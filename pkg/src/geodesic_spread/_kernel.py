"""Compiled fixed-step RK4 integrator for the spread equations.

Mirrors ``propagation._integrate_python`` step for step; the Python path
is the reference and the tests hold the two to rounding agreement.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

EISENHART = 0
JACOBI_GENERIC = 1
JACOBI_CLOSED = 2

OK = 0
SINGULAR = 1
DIVERGED = 2

DIVERGENCE_BOUND = 1e300


@njit(cache=True)
def _phase_point(t, theta, omega, amp, q, qd):
    kin = 0.0
    for k in range(theta.size):
        arg = omega * t + theta[k]
        q[k] = amp * math.cos(arg)
        qd[k] = -amp * omega * math.sin(arg)
        kin += qd[k] * qd[k]
    return 0.5 * kin


@njit(cache=True)
def _accel_generic(omega, q, qd, kin, x, v, out):
    n = x.size
    w2 = omega * omega
    a = w2 / kin
    qv = 0.0
    qdv = 0.0
    qx = 0.0
    qdx = 0.0
    qdq = 0.0
    for k in range(n):
        qv += q[k] * v[k]
        qdv += qd[k] * v[k]
        qx += q[k] * x[k]
        qdx += qd[k] * x[k]
        qdq += qd[k] * q[k]
    for k in range(n):
        i_term = q[k] * qdv - qd[k] * qv
        j_term = w2 * q[k] * qx - qd[k] * qdx
        k_term = -a * qdq * qd[k] * qx
        out[k] = -w2 * x[k] - a * (i_term + j_term + k_term)


@njit(cache=True)
def _accel_closed(t, theta, omega, amp, ratio, phi, mean_kin, x, v, out):
    # printed couplings; T from the closed-form kinetic energy
    n = x.size
    w = omega
    c2 = amp * amp
    kin = mean_kin * (1.0 - ratio * math.cos(2.0 * w * t + phi))
    scale = w * w * c2 / kin
    kscale = -(w**4) * c2 * c2 / (2.0 * kin * kin) * math.sin(2.0 * w * t + phi)
    for k in range(n):
        acc_i = 0.0
        acc_jk = 0.0
        for j in range(n):
            d = math.sin(theta[k] - theta[j]) if j != k else 0.0
            s = 2.0 * w * t + theta[k] + theta[j]
            acc_i += scale * d * v[j]
            acc_jk += (scale * math.cos(s) + kscale * (math.sin(s) - d)) * x[j]
        out[k] = -w * w * x[k] - w * acc_i - w * w * acc_jk
    return kin


@njit(cache=True)
def _accel(metric, t, theta, omega, amp, ratio, phi, mean_kin, q, qd, kin, x, v, out):
    if metric == EISENHART:
        for k in range(x.size):
            out[k] = -omega * omega * x[k]
    elif metric == JACOBI_GENERIC:
        _accel_generic(omega, q, qd, kin, x, v, out)
    else:
        _accel_closed(t, theta, omega, amp, ratio, phi, mean_kin, x, v, out)


@njit(cache=True)
def _norm(omega, x, v):
    acc = 0.0
    for k in range(x.size):
        acc += omega * omega * x[k] * x[k] + v[k] * v[k]
    return math.sqrt(acc)


@njit(cache=True)
def integrate(
    metric,
    theta,
    omega,
    amp,
    ratio,
    phi,
    mean_kin,
    dt,
    n_steps,
    renorm_every,
    floor,
    xi,
    xi_dot,
):
    """Integrate from t = 0 with periodic renormalization.

    Returns (status, count, times, logs, arcs, min_kinetic, abort_time,
    xi, xi_dot); ``logs[i]`` is the accumulated log-norm at ``times[i]``
    and the final entry is always at the last completed step.
    """
    n = theta.size
    check_floor = metric != EISENHART
    n_slots = n_steps // renorm_every + 2
    times = np.empty(n_slots)
    logs = np.empty(n_slots)
    arcs = np.empty(n_slots)

    x = xi.copy()
    v = xi_dot.copy()
    xt = np.empty(n)
    a1 = np.empty(n)
    a2 = np.empty(n)
    a3 = np.empty(n)
    a4 = np.empty(n)
    v2 = np.empty(n)
    v3 = np.empty(n)
    v4 = np.empty(n)
    q0 = np.empty(n)
    qd0 = np.empty(n)
    qh = np.empty(n)
    qdh = np.empty(n)
    q1 = np.empty(n)
    qd1 = np.empty(n)

    log_norm = 0.0
    arc = 0.0
    count = 0
    status = OK
    abort_time = math.nan
    kin0 = _phase_point(0.0, theta, omega, amp, q0, qd0)
    min_kin = kin0
    if check_floor and kin0 <= floor:
        return SINGULAR, 0, times[:0], logs[:0], arcs[:0], kin0, 0.0, x, v

    h = 0.5 * dt
    for step in range(n_steps):
        t = step * dt
        th = t + h
        t1 = (step + 1) * dt
        kinh = _phase_point(th, theta, omega, amp, qh, qdh)
        kin1 = _phase_point(t1, theta, omega, amp, q1, qd1)
        if kinh < min_kin:
            min_kin = kinh
        if kin1 < min_kin:
            min_kin = kin1
        if check_floor and (kinh <= floor or kin1 <= floor):
            status = SINGULAR
            abort_time = th if kinh <= floor else t1
            break

        _accel(metric, t, theta, omega, amp, ratio, phi, mean_kin, q0, qd0, kin0, x, v, a1)
        for k in range(n):
            xt[k] = x[k] + h * v[k]
            v2[k] = v[k] + h * a1[k]
        _accel(metric, th, theta, omega, amp, ratio, phi, mean_kin, qh, qdh, kinh, xt, v2, a2)
        for k in range(n):
            xt[k] = x[k] + h * v2[k]
            v3[k] = v[k] + h * a2[k]
        _accel(metric, th, theta, omega, amp, ratio, phi, mean_kin, qh, qdh, kinh, xt, v3, a3)
        for k in range(n):
            xt[k] = x[k] + dt * v3[k]
            v4[k] = v[k] + dt * a3[k]
        _accel(metric, t1, theta, omega, amp, ratio, phi, mean_kin, q1, qd1, kin1, xt, v4, a4)
        blown = False
        for k in range(n):
            x[k] = x[k] + dt / 6.0 * (v[k] + 2.0 * v2[k] + 2.0 * v3[k] + v4[k])
            v[k] = v[k] + dt / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k])
            if not (abs(x[k]) <= DIVERGENCE_BOUND and abs(v[k]) <= DIVERGENCE_BOUND):
                blown = True
        arc += dt * (kin0 + kin1)
        if blown:
            status = DIVERGED
            abort_time = t1
            break

        if (step + 1) % renorm_every == 0 or step + 1 == n_steps:
            nrm = _norm(omega, x, v)
            if nrm == 0.0:
                status = DIVERGED
                abort_time = t1
                break
            log_norm += math.log(nrm)
            for k in range(n):
                x[k] /= nrm
                v[k] /= nrm
            times[count] = t1
            logs[count] = log_norm
            arcs[count] = arc
            count += 1

        for k in range(n):
            q0[k] = q1[k]
            qd0[k] = qd1[k]
        kin0 = kin1

    return status, count, times[:count], logs[:count], arcs[:count], min_kin, abort_time, x, v
