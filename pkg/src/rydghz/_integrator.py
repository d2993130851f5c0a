"""Compiled DOP853 propagation kernel for the collective chain.

The Schroedinger right-hand side on the 2N+1 chain is tiny, so generic
integrator frameworks spend their time in per-step interpreter overhead.
This module runs the full adaptive loop (embedded 8(5,3) pair, PI-free
standard controller, seventh-order dense output for trajectory samples)
under numba.  Envelope channels arrive as flat term tables produced by
:meth:`rydghz.pulses.PulseSchedule.term_tables`.

Status codes: 0 success, 1 step size underflow.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._dop853_tables import A, B, C, D, E3, E5

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERR_EXP = -1.0 / 8.0  # error estimator order 7

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1

# envelope term kinds, mirrored from rydghz.pulses
_KIND_CONST = 0
_KIND_GAUSS = 1
_KIND_RAMP = 2
_KIND_RECT = 3
_KIND_GAUSS_OFF = 4
_KIND_GAUSS_ON = 5


@njit(cache=True, fastmath=False)
def _smoothstep(x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return 0.5 * (1.0 - math.cos(math.pi * x))


@njit(cache=True, fastmath=False)
def _channel(table, t):
    total = 0.0
    for k in range(table.shape[0]):
        kind = int(table[k, 0])
        if kind == _KIND_CONST:
            total += table[k, 1]
        elif kind == _KIND_GAUSS:
            u = (t - table[k, 2]) / table[k, 3]
            total += table[k, 1] * math.exp(-u * u)
        elif kind == _KIND_RAMP:
            v0 = table[k, 1]
            t0 = table[k, 2]
            v1 = table[k, 3]
            t1 = table[k, 4]
            if t <= t0:
                total += v0
            elif t >= t1:
                total += v1
            else:
                total += v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        elif kind == _KIND_RECT:
            amp = table[k, 1]
            t_on = table[k, 2]
            t_off = table[k, 3]
            e = table[k, 4]
            total += (
                amp
                * _smoothstep((t - (t_on - 0.5 * e)) / e)
                * _smoothstep(((t_off + 0.5 * e) - t) / e)
            )
        elif kind == _KIND_GAUSS_OFF:
            u = (t - table[k, 2]) / table[k, 3]
            total += (
                table[k, 1]
                * math.exp(-u * u)
                * _smoothstep((table[k, 4] + table[k, 5] - t) / table[k, 5])
            )
        elif kind == _KIND_GAUSS_ON:
            u = (t - table[k, 2]) / table[k, 3]
            total += (
                table[k, 1]
                * math.exp(-u * u)
                * _smoothstep((t - table[k, 4] + table[k, 5]) / table[k, 5])
            )
    return total


@njit(cache=True, fastmath=False)
def _rhs(t, y, out, tab_o1, tab_o2, tab_d1, tab_d2, w1, w2, n_a, n_b, gamma, n):
    """out = -i H(t) y - (gamma/2) P_r y on the interleaved-free chain layout."""
    o1 = _channel(tab_o1, t)
    o2 = _channel(tab_o2, t)
    d1 = _channel(tab_d1, t)
    d2 = _channel(tab_d2, t)
    for m in range(n + 1):
        acc = (d1 * n_a[m] + d2 * n_b[m]) * y[m]
        if m < n:
            acc += o1 * w1[m] * y[n + 1 + m]
        if m >= 1:
            acc += o2 * w2[m - 1] * y[n + m]
        out[m] = -1j * acc
    for m in range(n):
        i = n + 1 + m
        acc = (d1 * n_a[i] + d2 * n_b[i]) * y[i]
        acc += o1 * w1[m] * y[m]
        acc += o2 * w2[m] * y[m + 1]
        out[i] = -1j * acc - 0.5 * gamma * y[i]
    return out


@njit(cache=True, fastmath=False)
def _rms_scaled(v, scale):
    total = 0.0
    for i in range(v.shape[0]):
        r = abs(v[i]) / scale[i]
        total += r * r
    return math.sqrt(total / v.shape[0])


@njit(cache=True, fastmath=False)
def _initial_step(
    t0, y0, f0, rtol, atol, max_step, span,
    tab_o1, tab_o2, tab_d1, tab_d2, w1, w2, n_a, n_b, gamma, n,
):
    dim = y0.shape[0]
    scale = np.empty(dim, dtype=np.float64)
    for i in range(dim):
        scale[i] = atol + rtol * abs(y0[i])
    d0 = _rms_scaled(y0, scale)
    d1 = _rms_scaled(f0, scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, 0.1 * span, max_step)
    y1 = y0 + h0 * f0
    f1 = np.empty(dim, dtype=np.complex128)
    _rhs(t0 + h0, y1, f1, tab_o1, tab_o2, tab_d1, tab_d2, w1, w2, n_a, n_b, gamma, n)
    d2 = _rms_scaled(f1 - f0, scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1, span, max_step)


@njit(cache=True, fastmath=False)
def integrate(
    t0,
    t1,
    y0,
    rtol,
    atol,
    max_step,
    tab_o1,
    tab_o2,
    tab_d1,
    tab_d2,
    w1,
    w2,
    n_a,
    n_b,
    gamma,
    sample_ts,
):
    """Adaptive DOP853 from t0 to t1 with interpolated samples.

    Returns (samples, y_final, status, n_steps, n_rhs).  sample_ts must be
    sorted ascending and lie inside [t0, t1].
    """
    dim = y0.shape[0]
    n = (dim - 1) // 2
    n_samples = sample_ts.shape[0]
    ys = np.empty((n_samples, dim), dtype=np.complex128)
    k_mat = np.empty((16, dim), dtype=np.complex128)
    y = y0.copy()
    y_tmp = np.empty(dim, dtype=np.complex128)
    err5 = np.empty(dim, dtype=np.complex128)
    err3 = np.empty(dim, dtype=np.complex128)
    scale = np.empty(dim, dtype=np.float64)
    f_interp = np.empty((7, dim), dtype=np.complex128)

    n_rhs = 0
    n_steps = 0
    t = t0
    samp = 0
    while samp < n_samples and sample_ts[samp] <= t0:
        ys[samp] = y
        samp += 1

    _rhs(t, y, k_mat[0], tab_o1, tab_o2, tab_d1, tab_d2, w1, w2, n_a, n_b, gamma, n)
    n_rhs += 1
    h = _initial_step(
        t0, y, k_mat[0], rtol, atol, max_step, t1 - t0,
        tab_o1, tab_o2, tab_d1, tab_d2, w1, w2, n_a, n_b, gamma, n,
    )
    min_step = 1e-14 * (t1 - t0)
    rejected = False

    while t < t1:
        if h < min_step:
            return ys, y, STATUS_STEP_UNDERFLOW, n_steps, n_rhs
        last = False
        if t + h >= t1:
            h = t1 - t
            last = True
        t_new = t1 if last else t + h

        # stages 1..11 (stage 0 is the stored derivative at t)
        for s in range(1, 12):
            for i in range(dim):
                acc = 0.0 + 0.0j
                for j in range(s):
                    aij = A[s, j]
                    if aij != 0.0:
                        acc += aij * k_mat[j, i]
                y_tmp[i] = y[i] + h * acc
            _rhs(
                t + C[s] * h, y_tmp, k_mat[s],
                tab_o1, tab_o2, tab_d1, tab_d2, w1, w2, n_a, n_b, gamma, n,
            )
            n_rhs += 1
        y_new = np.empty(dim, dtype=np.complex128)
        for i in range(dim):
            acc = 0.0 + 0.0j
            for j in range(12):
                acc += B[j] * k_mat[j, i]
            y_new[i] = y[i] + h * acc
        _rhs(
            t_new, y_new, k_mat[12],
            tab_o1, tab_o2, tab_d1, tab_d2, w1, w2, n_a, n_b, gamma, n,
        )
        n_rhs += 1

        # stabilized 5th/3rd order error estimate
        for i in range(dim):
            scale[i] = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            a5 = 0.0 + 0.0j
            a3 = 0.0 + 0.0j
            for j in range(13):
                a5 += E5[j] * k_mat[j, i]
                a3 += E3[j] * k_mat[j, i]
            err5[i] = a5
            err3[i] = a3
        e5 = 0.0
        e3 = 0.0
        for i in range(dim):
            r5 = abs(err5[i]) / scale[i]
            r3 = abs(err3[i]) / scale[i]
            e5 += r5 * r5
            e3 += r3 * r3
        if e5 == 0.0 and e3 == 0.0:
            err_norm = 0.0
        else:
            err_norm = abs(h) * e5 / math.sqrt((e5 + 0.01 * e3) * dim)

        if err_norm < 1.0:
            if err_norm == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, _SAFETY * err_norm**_ERR_EXP)
            if rejected:
                factor = min(1.0, factor)
            n_steps += 1

            # dense output for any samples inside (t, t_new]
            if samp < n_samples and sample_ts[samp] <= t_new:
                for s in range(13, 16):
                    for i in range(dim):
                        acc = 0.0 + 0.0j
                        for j in range(s):
                            aij = A[s, j]
                            if aij != 0.0:
                                acc += aij * k_mat[j, i]
                        y_tmp[i] = y[i] + h * acc
                    _rhs(
                        t + C[s] * h, y_tmp, k_mat[s],
                        tab_o1, tab_o2, tab_d1, tab_d2, w1, w2, n_a, n_b, gamma, n,
                    )
                    n_rhs += 1
                for i in range(dim):
                    dy = y_new[i] - y[i]
                    f_interp[0, i] = dy
                    f_interp[1, i] = h * k_mat[0, i] - dy
                    f_interp[2, i] = 2.0 * dy - h * (k_mat[12, i] + k_mat[0, i])
                for q in range(4):
                    for i in range(dim):
                        acc = 0.0 + 0.0j
                        for j in range(16):
                            dqj = D[q, j]
                            if dqj != 0.0:
                                acc += dqj * k_mat[j, i]
                        f_interp[3 + q, i] = h * acc
                while samp < n_samples and sample_ts[samp] <= t_new:
                    x = (sample_ts[samp] - t) / h
                    for i in range(dim):
                        acc = 0.0 + 0.0j
                        for p in range(6, -1, -1):
                            acc += f_interp[p, i]
                            if (6 - p) % 2 == 0:
                                acc *= x
                            else:
                                acc *= 1.0 - x
                        ys[samp, i] = y[i] + acc
                    samp += 1

            rejected = False
            t = t_new
            for i in range(dim):
                y[i] = y_new[i]
                k_mat[0, i] = k_mat[12, i]
            h = min(h * factor, max_step)
        else:
            rejected = True
            h *= max(_MIN_FACTOR, _SAFETY * err_norm**_ERR_EXP)

    while samp < n_samples:
        ys[samp] = y
        samp += 1
    return ys, y, STATUS_OK, n_steps, n_rhs
