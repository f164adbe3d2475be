"""Time evolution: deterministic Lindblad steps and diffusive measurement
trajectories on small dense Hilbert spaces.

The functions here take and return raw complex arrays so they can be called
in tight loops; `simulate_trajectory` wraps a full conditioned run and is the
reference implementation that the batched real-arithmetic kernels are tested
against. Two stepping schemes are provided for the stochastic part:

euler-maruyama
    The textbook explicit discretization of the diffusive measurement
    equation. Cheap, but it neither preserves positivity nor keeps pure
    states pure at perfect efficiency, so a step that drives an eigenvalue
    below -1e-6 aborts the trajectory rather than continue from an unphysical
    state.

normalized-euler (default)
    A completely positive one-step Kraus update: apply
    M = 1 - (i H + c^+ c / 2 + sum_k r_k L_k^+ L_k / 2) dt + sqrt(eta) c dV,
    add the undetected and auxiliary dissipators, renormalize. Positivity
    holds by construction, pure states stay exactly pure at eta = 1, and the
    update agrees with euler-maruyama to first order in dt.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .hamiltonians import LindbladChannel
from .qcore import DensityMatrix, Operator

POSITIVITY_ABORT = -1e-6


class Scheme(Enum):
    EULER_MARUYAMA = "euler-maruyama"
    NORMALIZED_EULER = "normalized-euler"


@dataclass(frozen=True)
class SMEConfig:
    """Parameters of a continuously monitored evolution.

    dt : timestep, > 0
    eta : detection efficiency in [0, 1]
    gamma_m : measurement rate of the monitored channel
    seed : seed for the trajectory noise when no generator is passed in
    scheme : stepping scheme, see the module docstring
    """

    dt: float
    eta: float
    gamma_m: float
    seed: int = 0
    scheme: Scheme = Scheme.NORMALIZED_EULER

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta (detection efficiency) must lie in [0, 1], got {self.eta}")
        if self.gamma_m < 0.0:
            raise ValueError(f"measurement rate must be >= 0, got {self.gamma_m}")


class IntegratorAbort(RuntimeError):
    """A stochastic step left the physical state space beyond tolerance."""

    def __init__(self, message: str, seed=None):
        super().__init__(message)
        self.seed = seed


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One conditioned run: times, measurement record, states, extracted work.

    states holds raw (d, d) complex arrays, one per time point, trace one
    after each normalized step; wrap entries in DensityMatrix to re-validate.
    work_increments[k] is the energy extracted through the drive during step
    k, i.e. minus the unitary part of the change of the tracked energy
    observable, and is all zeros when no observable was tracked.
    """

    times: np.ndarray
    dV: np.ndarray
    states: np.ndarray
    work_increments: np.ndarray

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def n_steps_for(t_final: float, dt: float) -> int:
    """Number of steps covering t_final, requiring an integer fit."""
    if t_final < 0.0:
        raise ValueError(f"t_final must be >= 0, got {t_final}")
    n = int(round(t_final / dt))
    if abs(n * dt - t_final) > 1e-9 * max(t_final, dt):
        raise ValueError(f"t_final = {t_final} is not an integer multiple of dt = {dt}")
    return n


def _unpack_channels(channels) -> list[tuple[float, np.ndarray]]:
    out = []
    for ch in channels:
        if isinstance(ch, LindbladChannel):
            out.append((ch.rate, ch.operator.entries))
        else:
            rate, op = ch
            out.append((float(rate), op.entries if isinstance(op, Operator) else np.asarray(op)))
    return out


def _lindblad_rhs(rho: np.ndarray, h: np.ndarray, channels) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    for rate, L in channels:
        Ld = L.conj().T
        LdL = Ld @ L
        out = out + rate * (L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL))
    return out


def lindblad_step(rho: np.ndarray, h: np.ndarray, channels, dt: float) -> tuple[np.ndarray, float]:
    """One classical Runge-Kutta step of the Lindblad equation.

    Returns (next_state, trace_drift) where trace_drift is the absolute
    deviation of the raw trace from one before renormalization. The generator
    is traceless, so the drift measures accumulated floating-point error and
    should stay many orders below the 1e-4 per-step budget.
    """
    chans = _unpack_channels(channels)
    max_rate = max((r for r, _ in chans), default=0.0)
    if dt * max_rate > 0.1:
        raise ValueError(
            f"dt * max(rate) = {dt * max_rate:.3g} exceeds 0.1; shrink the timestep"
        )
    k1 = _lindblad_rhs(rho, h, chans)
    k2 = _lindblad_rhs(rho + 0.5 * dt * k1, h, chans)
    k3 = _lindblad_rhs(rho + 0.5 * dt * k2, h, chans)
    k4 = _lindblad_rhs(rho + dt * k3, h, chans)
    raw = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    tr = float(np.real(np.trace(raw)))
    return raw / tr, abs(tr - 1.0)


def evolve_lindblad(
    rho0: DensityMatrix,
    h: Operator,
    channels: Sequence[LindbladChannel],
    t_final: float,
    dt: float,
) -> DensityMatrix:
    """Integrate the Lindblad equation from a validated state to t_final."""
    n = n_steps_for(t_final, dt)
    rho = rho0.entries.copy()
    for _ in range(n):
        rho, _ = lindblad_step(rho, h.entries, channels, dt)
    return DensityMatrix(rho0.space, 0.5 * (rho + rho.conj().T))


def sme_step(
    rho: np.ndarray,
    h: np.ndarray,
    measure_op: np.ndarray,
    cfg: SMEConfig,
    xi: float,
    extra_channels=(),
) -> tuple[np.ndarray, float]:
    """One step of the conditioned evolution under monitoring of measure_op.

    xi is a standard normal draw; the Wiener increment is xi sqrt(dt). The
    homodyne-style record increment

        dV = sqrt(eta) tr((c + c^+) rho) dt + dW,  c = sqrt(gamma_m / 2) m

    is returned together with the updated state.
    """
    dt = cfg.dt
    eta = cfg.eta
    c = np.sqrt(0.5 * cfg.gamma_m) * measure_op
    chans = _unpack_channels(extra_channels)
    dw = xi * np.sqrt(dt)
    mean_c = float(np.real(np.trace((c + c.conj().T) @ rho)))
    dv = np.sqrt(eta) * mean_c * dt + dw

    if cfg.scheme is Scheme.EULER_MARUYAMA:
        drift = _lindblad_rhs(rho, h, [(1.0, c)] + chans)
        innovation = np.sqrt(eta) * (c @ rho + rho @ c.conj().T - mean_c * rho)
        nxt = rho + drift * dt + innovation * dw
    else:
        half = 0.5 * (c.conj().T @ c)
        for rate, L in chans:
            half = half + 0.5 * rate * (L.conj().T @ L)
        m = np.eye(rho.shape[0], dtype=complex) - (1j * h + half) * dt + np.sqrt(eta) * c * dv
        nxt = m @ rho @ m.conj().T + (1.0 - eta) * (c @ rho @ c.conj().T) * dt
        for rate, L in chans:
            nxt = nxt + rate * (L @ rho @ L.conj().T) * dt
        nxt = nxt / float(np.real(np.trace(nxt)))

    low = float(np.linalg.eigvalsh(0.5 * (nxt + nxt.conj().T))[0])
    if low < POSITIVITY_ABORT:
        raise IntegratorAbort(
            f"state eigenvalue {low:.3e} fell below {POSITIVITY_ABORT} "
            f"(scheme {cfg.scheme.value}, dt {dt})"
        )
    return nxt, dv


def simulate_trajectory(
    rho0: DensityMatrix,
    h: Operator,
    measure_op: Operator,
    cfg: SMEConfig,
    t_final: float,
    extra_channels: Sequence[LindbladChannel] = (),
    energy_op: Operator | None = None,
    rng: np.random.Generator | None = None,
) -> TrajectoryRecord:
    """Run one conditioned trajectory and record everything along the way.

    The same generator draws exactly one standard normal per step, so a run
    is reproducible from (cfg.seed, t_final) alone. Passing an explicit rng
    overrides the config seed.
    """
    n = n_steps_for(t_final, cfg.dt)
    if rng is None:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed)))
    dim = rho0.space.dim
    states = np.empty((n + 1, dim, dim), dtype=complex)
    dv = np.empty(n, dtype=float)
    work = np.zeros(n, dtype=float)
    states[0] = rho0.entries
    rho = rho0.entries.copy()
    h_arr = h.entries
    m_arr = measure_op.entries
    e_arr = None if energy_op is None else energy_op.entries
    try:
        for k in range(n):
            if e_arr is not None:
                comm = h_arr @ rho - rho @ h_arr
                work[k] = float(np.real(1j * np.trace(e_arr @ comm))) * cfg.dt
            rho, dv[k] = sme_step(rho, h_arr, m_arr, cfg, float(rng.standard_normal()), extra_channels)
            states[k + 1] = rho
    except IntegratorAbort as err:
        raise IntegratorAbort(str(err), seed=cfg.seed) from None
    times = np.arange(n + 1, dtype=float) * cfg.dt
    return TrajectoryRecord(times=times, dV=dv, states=states, work_increments=work)
