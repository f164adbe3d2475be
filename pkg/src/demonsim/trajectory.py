"""Continuously monitored qubit engine driven by its own measurement record.

One trial: a projective energy measurement collapses a thermal qubit to the
outcome z, the qubit is then simultaneously Rabi-driven and weakly monitored
along sigma_z for a time t_m, and the demon closes the cycle with the exact
rotation that moves the conditioned Bloch vector onto the ground state,
followed by a projective verification giving z'. Work is the two-point
energy drop z - z' in units of the qubit frequency;

    i_qc = ln p_tm(z') - ln p_0(z)

weighs the trial by the conditioned final populations p_tm against the
thermal initial ones p_0. Because z' is Born-sampled from exactly the same
populations that enter i_qc, the generalized fluctuation relation holds
trial by trial in expectation, at every efficiency and measurement time.

The monitored segment runs on the batched real-state kernel for the default
normalized-euler scheme; the euler-maruyama scheme falls back to the dense
reference stepper, trial by trial, and is only meant for small comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, streams
from .evolve import Scheme, SMEConfig, n_steps_for, simulate_trajectory
from .qcore import DensityMatrix, Operator, QUBIT, sigma_y, sigma_z, thermal_qubit_population
from .records import IrreversibleEventError, TPMRecord

BLOCH_TIE_TOL = 1e-12


@dataclass(frozen=True)
class TrajectoryDemonConfig:
    """Run parameters for the monitored protocol.

    beta_homega : dimensionless inverse temperature, >= 0 (0 = maximally mixed)
    sme : timestep, efficiency, measurement rate and scheme of the monitoring
    drive : coefficient of sigma_y in the rotating-frame Hamiltonian
    t_m : monitoring duration, an integer number of timesteps
    trials : number of independent trajectories
    seed : master seed for the per-trial streams
    """

    beta_homega: float
    sme: SMEConfig
    drive: float
    t_m: float
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not (self.beta_homega >= 0.0 and math.isfinite(self.beta_homega)):
            raise ValueError(f"beta_homega must be finite and >= 0, got {self.beta_homega}")
        if self.t_m <= 0.0:
            raise ValueError(f"t_m must be > 0, got {self.t_m}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        n_steps_for(self.t_m, self.sme.dt)

    @property
    def p_excited(self) -> float:
        return thermal_qubit_population(self.beta_homega)


def conditioned_finals(
    cfg: TrajectoryDemonConfig, start: int = 0, count: int | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Initial outcomes, conditioned final states and verification draws.

    Returns (z, finals, u_check): z[j] is trial j's first projective outcome,
    finals[j] the conditioned state (rho_gg, rho_ee, Re rho_ge) after t_m,
    and u_check[j] the uniform draw reserved for the closing measurement.
    Each trial consumes its stream in the fixed order (initial uniform, one
    normal per step, closing uniform), so any sharding reproduces the run.
    """
    if count is None:
        count = cfg.trials - start
    if start < 0 or count < 0 or start + count > cfg.trials:
        raise ValueError(f"trial range [{start}, {start + count}) outside [0, {cfg.trials})")
    n_steps = n_steps_for(cfg.t_m, cfg.sme.dt)
    p_e = cfg.p_excited
    z = np.empty(count, dtype=np.int64)
    finals = np.empty((count, 3), dtype=np.float64)
    u_check = np.empty(count, dtype=np.float64)

    if cfg.sme.scheme is not Scheme.NORMALIZED_EULER:
        sz = sigma_z()
        h_op = Operator(QUBIT, cfg.drive * sigma_y().entries)
        for j in range(count):
            rng = streams.trial_rng(cfg.seed, streams.TRAJECTORY, start + j)
            zj = 1 if rng.uniform() < p_e else 0
            amps = np.zeros(2, dtype=complex)
            amps[zj] = 1.0
            rho0 = DensityMatrix(QUBIT, np.outer(amps, amps.conj()))
            rec = simulate_trajectory(rho0, h_op, sz, cfg.sme, cfg.t_m, rng=rng)
            fin = rec.final_state
            z[j] = zj
            finals[j, 0] = fin[0, 0].real
            finals[j, 1] = fin[1, 1].real
            finals[j, 2] = fin[0, 1].real
            u_check[j] = rng.uniform()
        return z, finals, u_check

    # batched kernel path; cap the per-call noise buffer at ~2e7 doubles
    chunk = max(1, int(2e7 / max(n_steps, 1)))
    done = 0
    while done < count:
        m = min(chunk, count - done)
        rows = np.empty((m, n_steps), dtype=np.float64)
        for j in range(m):
            rng = streams.trial_rng(cfg.seed, streams.TRAJECTORY, start + done + j)
            zj = 1 if rng.uniform() < p_e else 0
            z[done + j] = zj
            rows[j] = rng.standard_normal(n_steps)
            u_check[done + j] = rng.uniform()
        state0 = np.zeros((m, 3), dtype=np.float64)
        state0[:, 0] = 1.0 - z[done : done + m]
        state0[:, 1] = z[done : done + m]
        noise = np.ascontiguousarray(rows.T)
        finals[done : done + m] = kernels.run_qubit_sme(
            state0, cfg.drive, cfg.sme.gamma_m, cfg.sme.eta, 0.0, cfg.sme.dt, noise
        )
        done += m
    return z, finals, u_check


def tm_populations(final) -> tuple[float, float]:
    """Populations after the aligning rotation: (larger on ground, smaller).

    The conditioned state (a, b, u) has Bloch length
    r = sqrt((b - a)^2 + 4 u^2) and eigenvalues (1 +- r) / 2; rotating the
    Bloch vector onto -z puts the larger one on the ground state, which is
    the population-maximizing choice among all unitaries. Below a 1e-12 tie
    the state is left untouched and the bare populations are returned.
    """
    a, b, u = float(final[0]), float(final[1]), float(final[2])
    r = math.hypot(b - a, 2.0 * u)
    if r < BLOCH_TIE_TOL:
        return a, b
    return 0.5 * (1.0 + r), 0.5 * (1.0 - r)


def rotated_ground_population(final, theta: float) -> float:
    """Ground population after rotating the state about y by theta.

    Used to check optimality of the aligning rotation: the maximum over
    theta of this function is tm_populations(final)[0].
    """
    a, b, u = float(final[0]), float(final[1]), float(final[2])
    c, s = math.cos(theta), math.sin(theta)
    return c * c * a - 2.0 * s * c * u + s * s * b


def population_entropy(p_pair) -> float:
    """Shannon entropy (nats) of a two-outcome distribution."""
    out = 0.0
    for q in p_pair:
        if q > 0.0:
            out -= q * math.log(q)
    return out


def i_qc_trajectory(z: int, z_prime: int, p_0, p_tm) -> float:
    """Information weight ln p_tm(z') - ln p_0(z) of one trajectory, nats."""
    if p_tm[z_prime] == 0.0:
        raise IrreversibleEventError(
            f"closing outcome z'={z_prime} has zero conditioned probability"
        )
    if p_0[z] == 0.0:
        raise IrreversibleEventError(f"initial outcome z={z} has zero thermal probability")
    return math.log(p_tm[z_prime]) - math.log(p_0[z])


def run_trajectory_demon(
    cfg: TrajectoryDemonConfig, start: int = 0, count: int | None = None
) -> list[TPMRecord]:
    """Sample trials [start, start + count) of the monitored protocol."""
    z, finals, u_check = conditioned_finals(cfg, start, count)
    p_e = cfg.p_excited
    p_0 = (1.0 - p_e, p_e)
    records = []
    for j in range(z.size):
        p_tm = tm_populations(finals[j])
        zj = int(z[j])
        zp = 1 if u_check[j] < p_tm[1] else 0
        info = i_qc_trajectory(zj, zp, p_0, p_tm)
        records.append(
            TPMRecord(
                e_i=float(zj),
                e_f=float(zp),
                w=float(zj - zp),
                i_qc=info,
                z=zj,
                z_prime=zp,
            )
        )
    return records
