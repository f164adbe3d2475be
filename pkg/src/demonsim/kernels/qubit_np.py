"""Batched qubit diffusive-measurement stepper, pure numpy.

This is the reference implementation of the hot loop shared by the
continuously monitored protocols: a driven qubit under homodyne-style
monitoring of sigma_z with efficiency eta, optional amplitude damping, no
cavity factor. The conditional state of every trajectory stays real in the
(|g>, |e>) basis when it starts real, so each trajectory is three floats:

    a = rho_gg,  b = rho_ee,  u = Re rho_ge

The update is the completely positive one-step Kraus form of the diffusive
measurement equation (normalized-euler scheme): with c = sqrt(gamma_m / 2)
sigma_z and drive H = omega sigma_y,

    M  = 1 - (i H + c^2 / 2 + gamma_a |e><e| / 2) dt + sqrt(eta) c dV
    rho' ~ M rho M^+ + (1 - eta) c rho c^+ dt + gamma_a sigma_- rho sigma_+ dt

renormalized to unit trace, with the record increment

    dV = sqrt(2 eta gamma_m) <sigma_z> dt + sqrt(dt) xi,   xi ~ N(0, 1).

Positivity holds by construction and a pure state stays exactly pure at
eta = 1 with gamma_a = 0. The Cython twin in _qubit_cy.pyx implements the
same arithmetic, expression for expression; keep the two in lockstep.
"""

from __future__ import annotations

import math

import numpy as np


def run_qubit_sme(state0, omega, gamma_m, eta, gamma_a, dt, noise, record="none"):
    """Advance a batch of monitored-qubit trajectories through shared timesteps.

    Parameters
    ----------
    state0 : (n, 3) float array
        Rows (a, b, u) per trajectory. Not modified.
    omega : float
        Coefficient of sigma_y in the rotating-frame Hamiltonian.
    gamma_m : float
        Measurement rate of the sigma_z monitoring channel.
    eta : float
        Detection efficiency in [0, 1].
    gamma_a : float
        Amplitude-damping rate toward |g>.
    dt : float
        Timestep.
    noise : (n_steps, n) float array
        Standard normal draws, noise[t, j] driving trajectory j at step t.
    record : {"none", "means", "full"}
        "none" returns the (n, 3) final states. "means" additionally returns
        an (n_steps + 1, 2) array of batch means of (<sigma_z>, <sigma_x>)
        including the initial time. "full" additionally returns the whole
        (n_steps + 1, n, 3) state history.

    Returns
    -------
    (n, 3) array, or a (final, extra) tuple when record is not "none".
    """
    state0 = np.asarray(state0, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if state0.ndim != 2 or state0.shape[1] != 3:
        raise ValueError(f"state0 must have shape (n, 3), got {state0.shape}")
    n = state0.shape[0]
    if noise.ndim != 2 or noise.shape[1] != n:
        raise ValueError(f"noise must have shape (n_steps, {n}), got {noise.shape}")
    n_steps = noise.shape[0]

    a = state0[:, 0].copy()
    b = state0[:, 1].copy()
    u = state0[:, 2].copy()

    g0 = 1.0 - 0.25 * gamma_m * dt
    g1 = 1.0 - 0.25 * gamma_m * dt - 0.5 * gamma_a * dt
    w = omega * dt
    c_deph = (1.0 - eta) * 0.5 * gamma_m * dt
    c_damp = gamma_a * dt
    drift_fac = math.sqrt(2.0 * eta * gamma_m) * dt
    kick_fac = math.sqrt(0.5 * eta * gamma_m)
    sqrt_dt = math.sqrt(dt)

    means = None
    full = None
    if record == "means":
        means = np.empty((n_steps + 1, 2), dtype=np.float64)
        means[0, 0] = np.mean(b - a)
        means[0, 1] = np.mean(2.0 * u)
    elif record == "full":
        full = np.empty((n_steps + 1, n, 3), dtype=np.float64)
        full[0, :, 0] = a
        full[0, :, 1] = b
        full[0, :, 2] = u
    elif record != "none":
        raise ValueError(f"unknown record mode {record!r}")

    for t in range(n_steps):
        dv = drift_fac * (b - a) + sqrt_dt * noise[t]
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
        if means is not None:
            means[t + 1, 0] = np.mean(b - a)
            means[t + 1, 1] = np.mean(2.0 * u)
        elif full is not None:
            full[t + 1, :, 0] = a
            full[t + 1, :, 1] = b
            full[t + 1, :, 2] = u

    final = np.stack([a, b, u], axis=1)
    if means is not None:
        return final, means
    if full is not None:
        return final, full
    return final
