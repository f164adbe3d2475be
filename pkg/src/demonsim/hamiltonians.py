"""Dispersive qubit-cavity Hamiltonians in the frames the protocols use.

All builders return Hermitian Operators on the [qubit, cavity] tensor order
fixed in qcore. Energies are angular frequencies with hbar = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import qcore
from .qcore import HilbertSpace, Operator


class Frame(Enum):
    """Rotating frame a Hamiltonian is written in."""

    LAB = "lab"
    QUBIT_DRIVE = "qubit-drive-rotating"
    CAVITY_DRIVE = "cavity-drive-rotating"


@dataclass(frozen=True)
class HamiltonianSpec:
    """Parameters of the dispersively coupled qubit-cavity system.

    omega_q, omega_c : bare qubit and cavity frequencies (lab frame)
    chi : dispersive shift per photon, must be >= 0
    detuning_q : qubit drive detuning delta (qubit-drive frame)
    detuning_c : cavity drive detuning (cavity-drive frame)
    drive_q : qubit Rabi drive amplitude
    drive_c : cavity drive amplitude
    frame : which rotating frame the constructed Hamiltonian lives in
    """

    omega_q: float = 1.0
    omega_c: float = 1.0
    chi: float = 0.0
    detuning_q: float = 0.0
    detuning_c: float = 0.0
    drive_q: float = 0.0
    drive_c: float = 0.0
    frame: Frame = Frame.LAB

    def __post_init__(self):
        if self.chi < 0.0:
            raise ValueError(f"dispersive shift chi must be >= 0, got {self.chi}")


@dataclass(frozen=True)
class LindbladChannel:
    """A dissipative channel: jump operator plus a nonnegative rate."""

    rate: float
    operator: Operator

    def __post_init__(self):
        if self.rate < 0.0:
            raise ValueError(f"channel rate must be >= 0, got {self.rate}")


def _qubit_cavity(qubit_part: np.ndarray, cavity_part: np.ndarray, n_cav: int) -> Operator:
    space = HilbertSpace((2, n_cav))
    return Operator(space, np.kron(qubit_part, cavity_part))


def build_dispersive(spec: HamiltonianSpec, n_cav: int) -> Operator:
    """Lab-frame dispersive Hamiltonian.

    H = (omega_q / 2) sigma_z + omega_c n - (chi / 2) sigma_z n

    Energy levels are E(s, n) = s omega_q / 2 + n omega_c - s n chi / 2 with
    s = -1 for |g> and +1 for |e>, so the qubit gap at photon number n is
    omega_q - n chi: each photon drags the gap down by chi.
    """
    if spec.frame is not Frame.LAB:
        raise ValueError(f"dispersive Hamiltonian is a lab-frame object, spec has {spec.frame.value}")
    sz = qcore.sigma_z().entries
    eye_q = np.eye(2, dtype=complex)
    eye_c = np.eye(n_cav, dtype=complex)
    num = qcore.number_op(n_cav).entries
    h = (
        0.5 * spec.omega_q * np.kron(sz, eye_c)
        + spec.omega_c * np.kron(eye_q, num)
        - 0.5 * spec.chi * np.kron(sz, num)
    )
    return Operator(HilbertSpace((2, n_cav)), h)


def build_driven_qubit(spec: HamiltonianSpec, n_cav: int | None = None) -> Operator:
    """Qubit-drive rotating-frame Hamiltonian.

    With the cavity factor: H = (1/2)(delta - chi n) sigma_z + drive_q sigma_y.
    The sigma_z prefactor vanishes on the photon-number sector n = delta / chi,
    which is what makes a weak drive number-selective. With n_cav omitted the
    qubit-only version (1/2) delta sigma_z + drive_q sigma_y is returned.
    """
    if spec.frame is not Frame.QUBIT_DRIVE:
        raise ValueError(f"expected frame {Frame.QUBIT_DRIVE.value}, got {spec.frame.value}")
    sz = qcore.sigma_z().entries
    sy = qcore.sigma_y().entries
    if n_cav is None:
        return Operator(qcore.QUBIT, 0.5 * spec.detuning_q * sz + spec.drive_q * sy)
    eye_c = np.eye(n_cav, dtype=complex)
    num = qcore.number_op(n_cav).entries
    h = (
        0.5 * spec.detuning_q * np.kron(sz, eye_c)
        - 0.5 * spec.chi * np.kron(sz, num)
        + spec.drive_q * np.kron(sy, eye_c)
    )
    return Operator(HilbertSpace((2, n_cav)), h)


def build_driven_cavity(spec: HamiltonianSpec, n_cav: int) -> Operator:
    """Cavity-drive rotating-frame Hamiltonian.

    H = (detuning_c - (chi / 2) sigma_z) n + drive_c (a + a^+)

    At detuning_c = +chi/2 the drive is resonant when the qubit is excited,
    at -chi/2 when it is in the ground state; the off-resonant branch sees a
    detuning of chi. This qubit-state-dependent response is the measurement
    resource of the monitored protocols.
    """
    if spec.frame is not Frame.CAVITY_DRIVE:
        raise ValueError(f"expected frame {Frame.CAVITY_DRIVE.value}, got {spec.frame.value}")
    sz = qcore.sigma_z().entries
    eye_q = np.eye(2, dtype=complex)
    num = qcore.number_op(n_cav).entries
    a = qcore.destroy(n_cav).entries
    h = (
        spec.detuning_c * np.kron(eye_q, num)
        - 0.5 * spec.chi * np.kron(sz, num)
        + spec.drive_c * np.kron(eye_q, a + a.conj().T)
    )
    return Operator(HilbertSpace((2, n_cav)), h)


def measurement_rate(kappa: float, alpha_g: complex, alpha_e: complex) -> float:
    """Qubit dephasing-equals-information rate of a pointer-state readout.

    For a cavity leaking at kappa whose steady field is alpha_g or alpha_e
    depending on the qubit state, the distinguishing rate is

        gamma_m = kappa |alpha_e - alpha_g|^2 / 2.

    Since both steady amplitudes scale linearly with the drive, the rate
    scales with the square of the drive amplitude.
    """
    if kappa < 0.0:
        raise ValueError(f"cavity decay rate must be >= 0, got {kappa}")
    return 0.5 * kappa * abs(alpha_e - alpha_g) ** 2
