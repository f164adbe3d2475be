"""Dense quantum-state primitives for a qubit coupled to a truncated cavity mode.

Small immutable value types plus pure functions on numpy arrays. Natural units
throughout the package: hbar = k_B = 1, qubit energies quoted in multiples of
the qubit frequency.

Conventions fixed here and relied on everywhere else:

* qubit basis order is (|g>, |e>), index 0 = ground
* sigma_z = diag(-1, +1), so sigma_z |e> = +|e>
* tensor factors are ordered [qubit, cavity]
* entropies are in nats
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-9
NORM_TOL = 1e-10
COHERENT_TAIL_TOL = 1e-8


def default_cavity_dim(alpha: complex) -> int:
    """Truncation size that keeps the coherent-state tail mass below 1e-8.

    The rule ceil(|alpha|^2 + 6 |alpha| + 10) leaves roughly six Poisson
    standard deviations of headroom above the mean photon number.
    """
    a = abs(alpha)
    return math.ceil(a * a + 6.0 * a + 10.0)


@dataclass(frozen=True)
class HilbertSpace:
    """An ordered tensor product of finite-dimensional factors."""

    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims:
            raise ValueError("HilbertSpace needs at least one tensor factor")
        for d in dims:
            if d < 1:
                raise ValueError(f"factor dimension must be >= 1, got {d}")
        object.__setattr__(self, "factor_dims", dims)

    @property
    def dim(self) -> int:
        out = 1
        for d in self.factor_dims:
            out *= d
        return out

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)


QUBIT = HilbertSpace((2,))


def _as_square(entries, space: HilbertSpace, what: str) -> np.ndarray:
    arr = np.array(entries, dtype=complex)
    if arr.shape != (space.dim, space.dim):
        raise ValueError(
            f"{what} on a dim-{space.dim} space needs shape "
            f"{(space.dim, space.dim)}, got {arr.shape}"
        )
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Operator:
    """A linear operator on `space`, stored dense."""

    space: HilbertSpace
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_square(self.entries, self.space, "Operator"))

    def dagger(self) -> "Operator":
        return Operator(self.space, self.entries.conj().T)

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return float(np.max(np.abs(self.entries - self.entries.conj().T))) <= tol

    def __matmul__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        if other.space != self.space:
            raise ValueError("operator product across different spaces")
        return Operator(self.space, self.entries @ other.entries)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state: Hermitian, unit trace, positive within tolerance.

    Validation happens once at construction. Code on hot paths works with raw
    arrays and wraps results in a DensityMatrix only at module boundaries.
    """

    space: HilbertSpace
    entries: np.ndarray

    def __post_init__(self):
        arr = _as_square(self.entries, self.space, "DensityMatrix")
        herm = float(np.max(np.abs(arr - arr.conj().T)))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"density matrix is not Hermitian: max deviation {herm:.3e}")
        tr = complex(np.trace(arr))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr.real:.12f}, not 1")
        low = float(np.linalg.eigvalsh(arr)[0])
        if low < EIGENVALUE_FLOOR:
            raise ValueError(f"density matrix has eigenvalue {low:.3e} below {EIGENVALUE_FLOOR}")
        object.__setattr__(self, "entries", arr)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


@dataclass(frozen=True, eq=False)
class PureState:
    """A normalized state vector on `space`."""

    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if arr.shape != (self.space.dim,):
            raise ValueError(
                f"PureState on a dim-{self.space.dim} space needs {self.space.dim} "
                f"amplitudes, got shape {arr.shape}"
            )
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state vector norm is {norm:.12f}, not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    def density(self) -> DensityMatrix:
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


def normalized(space: HilbertSpace, amplitudes) -> PureState:
    """Build a PureState from unnormalized amplitudes."""
    arr = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return PureState(space, arr / norm)


# ---------------------------------------------------------------------------
# Standard operators and states


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.dim, dtype=complex))


def sigma_x() -> Operator:
    return Operator(QUBIT, np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex))


def sigma_y() -> Operator:
    return Operator(QUBIT, np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex))


def sigma_z() -> Operator:
    """diag(-1, +1): the excited state is the +1 eigenstate."""
    return Operator(QUBIT, np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex))


def sigma_minus() -> Operator:
    """Lowering operator |g><e|."""
    return Operator(QUBIT, np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))


def fock_state(n: int, dim: int) -> PureState:
    if not 0 <= n < dim:
        raise ValueError(f"Fock index {n} outside [0, {dim})")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return PureState(HilbertSpace((dim,)), amps)


def ket_g() -> PureState:
    return fock_state(0, 2)


def ket_e() -> PureState:
    return fock_state(1, 2)


def destroy(dim: int) -> Operator:
    """Cavity annihilation operator on a dim-level truncation."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    return Operator(HilbertSpace((dim,)), a)


def number_op(dim: int) -> Operator:
    return Operator(HilbertSpace((dim,)), np.diag(np.arange(dim, dtype=float)).astype(complex))


def thermal_qubit(p_excited: float) -> DensityMatrix:
    if not 0.0 <= p_excited <= 1.0:
        raise ValueError(f"excited-state population must lie in [0, 1], got {p_excited}")
    return DensityMatrix(QUBIT, np.diag([1.0 - p_excited, p_excited]).astype(complex))


def thermal_qubit_population(beta_homega: float) -> float:
    """Excited-state population of a qubit at inverse temperature beta.

    beta_homega is the dimensionless combination beta * hbar * omega_q.
    """
    if beta_homega < 0.0:
        raise ValueError(f"beta_homega must be >= 0, got {beta_homega}")
    # 1 / (1 + e^x), stable for large x
    x = float(beta_homega)
    if x > 0:
        return math.exp(-x) / (1.0 + math.exp(-x))
    return 0.5


def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Projection of |alpha> onto the first `dim` Fock states, unnormalized."""
    n = np.arange(dim)
    a = abs(alpha)
    if a == 0.0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        return amps
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim, dtype=float)))))
    log_mag = -0.5 * a * a + n * math.log(a) - 0.5 * log_fact
    phase = np.exp(1j * n * np.angle(complex(alpha)))
    return np.exp(log_mag) * phase


def coherent_state(alpha: complex, dim: int | None = None) -> PureState:
    """Truncated coherent state, renormalized on the truncated space.

    Raises if the truncation drops 1e-8 or more of the probability mass, since
    results computed with such a state would silently lose photons.
    """
    if dim is None:
        dim = default_cavity_dim(alpha)
    amps = _coherent_amplitudes(alpha, dim)
    tail = 1.0 - float(np.sum(np.abs(amps) ** 2))
    if tail >= COHERENT_TAIL_TOL:
        raise ValueError(
            f"coherent state truncated at {dim} levels drops tail mass "
            f"{tail:.3e}; increase the cavity dimension"
        )
    return normalized(HilbertSpace((dim,)), amps)


def displacement(alpha: complex, dim: int) -> Operator:
    """D(alpha) = exp(alpha a^+ - alpha* a) on a truncated cavity space."""
    a = destroy(dim).entries
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return Operator(HilbertSpace((dim,)), scipy.linalg.expm(gen))


# ---------------------------------------------------------------------------
# Composition and reduction


def tensor(a, b):
    """Tensor product of two states or two operators, factor order preserved."""
    joined = None
    if isinstance(a, Operator) and isinstance(b, Operator):
        joined = HilbertSpace(a.space.factor_dims + b.space.factor_dims)
        return Operator(joined, np.kron(a.entries, b.entries))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        joined = HilbertSpace(a.space.factor_dims + b.space.factor_dims)
        return DensityMatrix(joined, np.kron(a.entries, b.entries))
    if isinstance(a, PureState) and isinstance(b, PureState):
        joined = HilbertSpace(a.space.factor_dims + b.space.factor_dims)
        return PureState(joined, np.kron(a.amplitudes, b.amplitudes))
    raise TypeError(
        f"tensor needs two states or two operators of the same kind, "
        f"got {type(a).__name__} and {type(b).__name__}"
    )


def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Trace out every tensor factor except `keep`."""
    dims = rho.space.factor_dims
    if len(dims) < 2:
        raise ValueError("partial_trace needs a composite space")
    if not 0 <= keep < len(dims):
        raise ValueError(f"factor index {keep} outside [0, {len(dims)})")
    t = rho.entries.reshape(*dims, *dims)
    n = len(dims)
    for i in sorted((j for j in range(n) if j != keep), reverse=True):
        t = np.trace(t, axis1=i, axis2=i + n)
        n -= 1
    return DensityMatrix(HilbertSpace((dims[keep],)), t)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S(rho) = -tr(rho ln rho) in nats, with 0 ln 0 = 0."""
    evals = np.linalg.eigvalsh(rho.entries)
    low = float(evals[0])
    if low < EIGENVALUE_FLOOR:
        raise ValueError(f"state has eigenvalue {low:.3e}; refusing to take its entropy")
    lam = np.clip(np.real(evals), 0.0, 1.0)
    nz = lam[lam > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def expectation(rho: DensityMatrix, op: Operator) -> complex:
    if op.space != rho.space:
        raise ValueError("operator and state live on different spaces")
    return complex(np.trace(rho.entries @ op.entries))


def expectation_real(rho: DensityMatrix, op: Operator) -> float:
    """Expectation value of a Hermitian observable, checked to be real."""
    val = expectation(rho, op)
    if abs(val.imag) > HERMITICITY_TOL:
        raise ValueError(f"expectation value has imaginary part {val.imag:.3e}")
    return val.real


def husimi_q(rho: DensityMatrix, grid) -> np.ndarray:
    """Husimi Q function <alpha|rho|alpha> / pi evaluated on a list of alphas.

    The coherent vectors use the state's own truncation without renormalizing,
    i.e. each value is the overlap with the projection of the true |alpha>.
    Tiny negative values from the positivity tolerance are clipped to zero.
    """
    if rho.space.n_factors != 1:
        raise ValueError("husimi_q expects a single-mode (cavity only) state")
    dim = rho.space.dim
    out = np.empty(len(grid), dtype=float)
    for idx, alpha in enumerate(grid):
        vec = _coherent_amplitudes(alpha, dim)
        out[idx] = max(float(np.real(vec.conj() @ rho.entries @ vec)) / math.pi, 0.0)
    return out
