"""Deterministic Lindblad stepping and diffusive trajectory integration."""

import math

import numpy as np
import pytest

from demonsim.evolve import (
    POSITIVITY_ABORT,
    IntegratorAbort,
    Scheme,
    SMEConfig,
    evolve_lindblad,
    lindblad_step,
    n_steps_for,
    simulate_trajectory,
    sme_step,
)
from demonsim.hamiltonians import LindbladChannel
from demonsim.qcore import (
    QUBIT,
    DensityMatrix,
    Operator,
    ket_e,
    ket_g,
    normalized,
    sigma_minus,
    sigma_y,
    sigma_z,
    thermal_qubit,
)


def plus_state():
    return normalized(QUBIT, [1.0, 1.0]).density()


def test_n_steps_for():
    assert n_steps_for(1.0, 0.01) == 100
    assert n_steps_for(0.0, 0.1) == 0
    with pytest.raises(ValueError, match="integer multiple"):
        n_steps_for(1.0, 0.3)
    with pytest.raises(ValueError, match=">= 0"):
        n_steps_for(-1.0, 0.1)


def test_lindblad_identity_map():
    rho = thermal_qubit(0.3)
    out, drift = lindblad_step(rho.entries, np.zeros((2, 2), dtype=complex), [], 0.05)
    assert np.allclose(out, rho.entries, atol=1e-15)
    assert drift < 1e-15


def test_lindblad_step_rate_cap():
    chan = [(5.0, sigma_minus())]
    with pytest.raises(ValueError, match="shrink the timestep"):
        lindblad_step(thermal_qubit(0.2).entries, np.zeros((2, 2), dtype=complex), chan, 0.05)


def test_dephasing_decay_closed_form():
    """Monitoring channel c = sqrt(gamma/2) sigma_z decays coherence as e^-t.

    Accuracy requirement: 1e-4 at t = 1/gamma with dt = 1e-3/gamma. The RK4
    update leaves orders of magnitude to spare.
    """
    gamma_m = 1.0
    dt = 1e-3
    rho = plus_state().entries
    c = math.sqrt(0.5 * gamma_m) * sigma_z().entries
    drifts = []
    for _ in range(1000):
        rho, d = lindblad_step(rho, np.zeros((2, 2), dtype=complex), [(1.0, c)], dt)
        drifts.append(d)
    assert abs(rho[0, 1].real - 0.5 * math.exp(-1.0)) < 1e-4
    assert abs(rho[0, 1].real - 0.5 * math.exp(-1.0)) < 1e-10  # actual RK4 headroom
    assert max(drifts) < 1e-12


def test_amplitude_damping_exact():
    gamma = 0.37
    h = Operator(QUBIT, np.zeros((2, 2), dtype=complex))
    chan = [LindbladChannel(rate=gamma, operator=sigma_minus())]
    out = evolve_lindblad(thermal_qubit(0.8), h, chan, t_final=2.0, dt=0.01)
    assert out.entries[1, 1].real == pytest.approx(0.8 * math.exp(-gamma * 2.0), abs=1e-10)


def test_sme_config_validation():
    with pytest.raises(ValueError, match="dt"):
        SMEConfig(dt=0.0, eta=0.5, gamma_m=1.0)
    with pytest.raises(ValueError, match="efficiency"):
        SMEConfig(dt=0.1, eta=1.5, gamma_m=1.0)
    with pytest.raises(ValueError, match="measurement rate"):
        SMEConfig(dt=0.1, eta=0.5, gamma_m=-1.0)


def test_sme_step_record_increment():
    cfg = SMEConfig(dt=0.01, eta=0.4, gamma_m=2.0)
    rho = ket_e().density().entries
    _, dv = sme_step(rho, np.zeros((2, 2), dtype=complex), sigma_z().entries, cfg, xi=0.0)
    # <c + c^+> = 2 sqrt(gamma_m/2) <sigma_z> = 2 for |e>
    assert dv == pytest.approx(math.sqrt(cfg.eta) * 2.0 * math.sqrt(1.0) * 0.01, abs=1e-15)


def test_normalized_euler_keeps_purity_at_unit_efficiency():
    cfg = SMEConfig(dt=0.01, eta=1.0, gamma_m=1.0, scheme=Scheme.NORMALIZED_EULER)
    rng = np.random.default_rng(3)
    rho = plus_state().entries
    for _ in range(1000):
        rho, _ = sme_step(rho, 0.3 * sigma_y().entries, sigma_z().entries, cfg, float(rng.standard_normal()))
    purity = float(np.real(np.trace(rho @ rho)))
    assert abs(purity - 1.0) < 5e-4


def test_euler_maruyama_aborts_on_positivity_loss():
    cfg = SMEConfig(dt=0.05, eta=1.0, gamma_m=4.0, scheme=Scheme.EULER_MARUYAMA)
    rho = plus_state().entries
    with pytest.raises(IntegratorAbort):
        for _ in range(200):
            rho, _ = sme_step(rho, np.zeros((2, 2), dtype=complex), sigma_z().entries, cfg, xi=4.0)


def test_simulate_trajectory_deterministic():
    cfg = SMEConfig(dt=0.01, eta=0.3, gamma_m=1.0, seed=42)
    h = Operator(QUBIT, 0.5 * sigma_y().entries)
    a = simulate_trajectory(ket_g().density(), h, sigma_z(), cfg, t_final=0.5)
    b = simulate_trajectory(ket_g().density(), h, sigma_z(), cfg, t_final=0.5)
    assert np.array_equal(a.dV, b.dV)
    assert np.array_equal(a.states, b.states)
    assert a.final_state.shape == (2, 2)
    assert a.times[-1] == pytest.approx(0.5)


def test_simulate_trajectory_abort_carries_seed():
    cfg = SMEConfig(dt=0.08, eta=1.0, gamma_m=5.0, seed=1234, scheme=Scheme.EULER_MARUYAMA)
    h = Operator(QUBIT, np.zeros((2, 2), dtype=complex))
    with pytest.raises(IntegratorAbort) as exc:
        simulate_trajectory(plus_state(), h, sigma_z(), cfg, t_final=40.0)
    assert exc.value.seed == 1234


def test_rabi_oscillation_under_trajectory_stepper():
    """gamma_m = 0 reduces the stepper to (first-order) unitary Rabi flopping."""
    omega = 1.0
    cfg = SMEConfig(dt=1e-3, eta=0.0, gamma_m=0.0, seed=0)
    h = Operator(QUBIT, omega * sigma_y().entries)
    t = math.pi / (2.0 * omega)  # half Rabi period: |g> -> |e>
    steps = int(round(t / cfg.dt))
    rec = simulate_trajectory(ket_g().density(), h, sigma_z(), cfg, t_final=steps * cfg.dt)
    assert rec.final_state[1, 1].real == pytest.approx(1.0, abs=5e-3)


def test_work_integration_half_rabi():
    """Releasing |e> through a pi pulse extracts one quantum of qubit energy."""
    omega = 1.0
    cfg = SMEConfig(dt=1e-3, eta=0.0, gamma_m=0.0, seed=0)
    h = Operator(QUBIT, omega * sigma_y().entries)
    energy = Operator(QUBIT, 0.5 * sigma_z().entries)
    t = math.pi / (2.0 * omega)
    steps = int(round(t / cfg.dt))
    rec = simulate_trajectory(
        ket_e().density(), h, sigma_z(), cfg, t_final=steps * cfg.dt, energy_op=energy
    )
    total = float(np.sum(rec.work_increments))
    assert total == pytest.approx(1.0, abs=5e-3)
    # and the sign flips when pumping the ground state up
    rec2 = simulate_trajectory(
        ket_g().density(), h, sigma_z(), cfg, t_final=steps * cfg.dt, energy_op=energy
    )
    assert float(np.sum(rec2.work_increments)) == pytest.approx(-1.0, abs=5e-3)


def test_schemes_agree_to_first_order():
    rng_a = np.random.default_rng(7)
    rng_b = np.random.default_rng(7)
    h = Operator(QUBIT, 0.4 * sigma_y().entries)
    finals = []
    for scheme, rng in ((Scheme.NORMALIZED_EULER, rng_a), (Scheme.EULER_MARUYAMA, rng_b)):
        cfg = SMEConfig(dt=1e-4, eta=0.5, gamma_m=1.0, scheme=scheme)
        rec = simulate_trajectory(thermal_qubit(0.4), h, sigma_z(), cfg, t_final=0.05, rng=rng)
        finals.append(rec.final_state)
    # same noise, same first order; the residual random-walks at O(dt^{3/2})
    assert np.allclose(finals[0], finals[1], atol=2e-3)


def test_positivity_abort_threshold_constant():
    assert POSITIVITY_ABORT == -1e-6
