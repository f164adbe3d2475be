# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython twin of kernels.qubit_np.

Same completely positive one-step update, same expression ordering, looped
per trajectory instead of batched. See qubit_np.py for the scheme notes;
any change there must be mirrored here.
"""

from libc.math cimport sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def run_qubit_sme(state0, double omega, double gamma_m, double eta,
                  double gamma_a, double dt, noise, record="none"):
    """Drop-in replacement for qubit_np.run_qubit_sme (same contract)."""
    state_arr = np.ascontiguousarray(np.asarray(state0, dtype=np.float64))
    noise_arr = np.ascontiguousarray(np.asarray(noise, dtype=np.float64))
    if state_arr.ndim != 2 or state_arr.shape[1] != 3:
        raise ValueError(f"state0 must have shape (n, 3), got {state_arr.shape}")
    cdef Py_ssize_t n = state_arr.shape[0]
    if noise_arr.ndim != 2 or noise_arr.shape[1] != n:
        raise ValueError(f"noise must have shape (n_steps, {n}), got {noise_arr.shape}")
    cdef Py_ssize_t n_steps = noise_arr.shape[0]

    cdef int mode
    if record == "none":
        mode = 0
    elif record == "means":
        mode = 1
    elif record == "full":
        mode = 2
    else:
        raise ValueError(f"unknown record mode {record!r}")

    cdef double g0 = 1.0 - 0.25 * gamma_m * dt
    cdef double g1 = 1.0 - 0.25 * gamma_m * dt - 0.5 * gamma_a * dt
    cdef double w = omega * dt
    cdef double c_deph = (1.0 - eta) * 0.5 * gamma_m * dt
    cdef double c_damp = gamma_a * dt
    cdef double drift_fac = sqrt(2.0 * eta * gamma_m) * dt
    cdef double kick_fac = sqrt(0.5 * eta * gamma_m)
    cdef double sqrt_dt = sqrt(dt)

    final_arr = np.empty((n, 3), dtype=np.float64)
    cdef double[:, ::1] final = final_arr
    cdef double[:, ::1] st = state_arr
    cdef double[:, ::1] xi = noise_arr

    sums_arr = None
    full_arr = None
    cdef double[:, ::1] sums = None
    cdef double[:, :, ::1] full = None
    if mode == 1:
        sums_arr = np.zeros((n_steps + 1, 2), dtype=np.float64)
        sums = sums_arr
    elif mode == 2:
        full_arr = np.empty((n_steps + 1, n, 3), dtype=np.float64)
        full = full_arr

    cdef Py_ssize_t j, t
    cdef double a, b, u, dv, d, m00, m11, n00, n11, n01, tr

    for j in range(n):
        a = st[j, 0]
        b = st[j, 1]
        u = st[j, 2]
        if mode == 1:
            sums[0, 0] += b - a
            sums[0, 1] += 2.0 * u
        elif mode == 2:
            full[0, j, 0] = a
            full[0, j, 1] = b
            full[0, j, 2] = u
        for t in range(n_steps):
            dv = drift_fac * (b - a) + sqrt_dt * xi[t, j]
            d = kick_fac * dv
            m00 = g0 - d
            m11 = g1 + d
            n00 = m00 * m00 * a + 2.0 * m00 * w * u + w * w * b + c_deph * a + c_damp * b
            n11 = w * w * a - 2.0 * w * m11 * u + m11 * m11 * b + c_deph * b
            n01 = -m00 * w * a + (m00 * m11 - w * w) * u + w * m11 * b - c_deph * u
            tr = n00 + n11
            a = n00 / tr
            b = n11 / tr
            u = n01 / tr
            if mode == 1:
                sums[t + 1, 0] += b - a
                sums[t + 1, 1] += 2.0 * u
            elif mode == 2:
                full[t + 1, j, 0] = a
                full[t + 1, j, 1] = b
                full[t + 1, j, 2] = u
        final[j, 0] = a
        final[j, 1] = b
        final[j, 2] = u

    if mode == 1:
        return final_arr, sums_arr / n
    if mode == 2:
        return final_arr, full_arr
    return final_arr
