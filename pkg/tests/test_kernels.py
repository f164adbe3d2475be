"""Batched stepper kernels: numpy reference vs compiled twin, record modes."""

import os
import subprocess
import sys

import numpy as np
import pytest

from demonsim import kernels
from demonsim.evolve import SMEConfig, simulate_trajectory
from demonsim.kernels import qubit_np
from demonsim.qcore import QUBIT, DensityMatrix, Operator, sigma_y, sigma_z


def random_batch(rng, n, n_steps):
    # random valid real states: a + b = 1, |u| <= sqrt(a b)
    a = rng.uniform(0.05, 0.95, size=n)
    b = 1.0 - a
    u = rng.uniform(-1.0, 1.0, size=n) * np.sqrt(a * b)
    state0 = np.column_stack([a, b, u])
    noise = rng.standard_normal((n_steps, n))
    return state0, noise


@pytest.mark.parametrize("gamma_a", [0.0, 0.2])
@pytest.mark.parametrize("eta", [0.0, 0.3, 1.0])
def test_backends_agree_bitwise(eta, gamma_a):
    """The compiled kernel mirrors the numpy arithmetic expression for
    expression, so identical inputs give identical doubles, not merely
    close ones."""
    if kernels.BACKEND != "cython":
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(11)
    state0, noise = random_batch(rng, 64, 200)
    args = (state0, 0.5, 1.0, eta, gamma_a, 0.01, noise)
    out_np = qubit_np.run_qubit_sme(*args)
    out_cy = kernels.run_qubit_sme(*args)
    assert np.array_equal(out_np, out_cy)


def test_backends_agree_with_records():
    if kernels.BACKEND != "cython":
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(5)
    state0, noise = random_batch(rng, 16, 50)
    args = (state0, 0.4, 2.0, 0.5, 0.0, 0.005, noise)
    f_np, m_np = qubit_np.run_qubit_sme(*args, record="means")
    f_cy, m_cy = kernels.run_qubit_sme(*args, record="means")
    assert np.allclose(m_np, m_cy, atol=1e-14)
    assert np.array_equal(f_np, f_cy)
    f_np, h_np = qubit_np.run_qubit_sme(*args, record="full")
    f_cy, h_cy = kernels.run_qubit_sme(*args, record="full")
    assert np.array_equal(h_np, h_cy)


def test_record_shapes():
    rng = np.random.default_rng(2)
    state0, noise = random_batch(rng, 8, 30)
    args = (state0, 0.5, 1.0, 0.3, 0.0, 0.01, noise)
    final = qubit_np.run_qubit_sme(*args)
    assert final.shape == (8, 3)
    final, means = qubit_np.run_qubit_sme(*args, record="means")
    assert means.shape == (31, 2)
    final, full = qubit_np.run_qubit_sme(*args, record="full")
    assert full.shape == (31, 8, 3)
    assert np.array_equal(full[-1], final)
    assert np.array_equal(full[0], state0)
    with pytest.raises(ValueError, match="record"):
        qubit_np.run_qubit_sme(*args, record="everything")


def test_input_validation():
    rng = np.random.default_rng(0)
    state0, noise = random_batch(rng, 4, 10)
    with pytest.raises(ValueError, match=r"\(n, 3\)"):
        qubit_np.run_qubit_sme(state0[:, :2], 0.5, 1.0, 0.3, 0.0, 0.01, noise)
    with pytest.raises(ValueError, match="noise"):
        qubit_np.run_qubit_sme(state0, 0.5, 1.0, 0.3, 0.0, 0.01, noise[:, :3])


def test_means_row_is_batch_average():
    rng = np.random.default_rng(9)
    state0, noise = random_batch(rng, 32, 20)
    args = (state0, 0.3, 1.5, 0.7, 0.1, 0.01, noise)
    _, means = qubit_np.run_qubit_sme(*args, record="means")
    _, full = qubit_np.run_qubit_sme(*args, record="full")
    sz = full[:, :, 1] - full[:, :, 0]
    sx = 2.0 * full[:, :, 2]
    assert np.allclose(means[:, 0], sz.mean(axis=1), atol=1e-13)
    assert np.allclose(means[:, 1], sx.mean(axis=1), atol=1e-13)


def test_kernel_matches_dense_stepper():
    """One trajectory through the batched kernel equals the dense complex
    reference driven by the same noise."""
    dt, eta, gamma_m, omega, gamma_a = 0.01, 0.3, 1.0, 0.5, 0.05
    n_steps = 400
    rng = np.random.default_rng(21)
    noise = rng.standard_normal((n_steps, 1))

    state0 = np.array([[0.7, 0.3, 0.2]])
    final = qubit_np.run_qubit_sme(state0, omega, gamma_m, eta, gamma_a, dt, noise)

    rho = DensityMatrix(
        QUBIT, np.array([[0.7, 0.2], [0.2, 0.3]], dtype=complex)
    )
    cfg = SMEConfig(dt=dt, eta=eta, gamma_m=gamma_m)
    h = Operator(QUBIT, omega * sigma_y().entries)

    class _Replay:
        def __init__(self, draws):
            self._draws = iter(draws)

        def standard_normal(self):
            return next(self._draws)

    from demonsim.hamiltonians import LindbladChannel
    from demonsim.qcore import sigma_minus

    rec = simulate_trajectory(
        rho,
        h,
        sigma_z(),
        cfg,
        t_final=n_steps * dt,
        extra_channels=(LindbladChannel(gamma_a, sigma_minus()),),
        rng=_Replay(noise[:, 0]),
    )
    dense = rec.final_state
    assert abs(final[0, 0] - dense[0, 0].real) < 1e-12
    assert abs(final[0, 1] - dense[1, 1].real) < 1e-12
    assert abs(final[0, 2] - dense[0, 1].real) < 1e-12


def test_forced_python_backend():
    env = dict(os.environ, DEMONSIM_FORCE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from demonsim import kernels; print(kernels.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_default_backend_is_compiled_when_available():
    try:
        from demonsim.kernels import _qubit_cy  # noqa: F401
    except ImportError:
        pytest.skip("compiled backend not built")
    assert kernels.BACKEND == "cython"
