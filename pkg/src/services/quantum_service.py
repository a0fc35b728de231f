"""
Quantum state propagation for the three control problems.

States are complex numpy vectors, density matrices complex square arrays,
and hbar = 1 throughout. Control functions are sampled on a fine grid of
alpha*N + 1 uniform points spanning [0, T].
"""

import logging
from functools import partial, reduce
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from ..models import (
    ControlProblem, HamiltonianTerm, PhysicsConfig, ProblemName, TermKind,
    FidelityMode, Reduction, Trajectory, QuantumState, DensityMatrix,
)
from ..utils.errors import ConfigurationError, PropagationError

logger = logging.getLogger(__name__)

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# basis ordering |g> = index 0, |e> = index 1
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.conj().T
# field truncated to Fock levels {0, 1}
ANNIHILATION = np.array([[0, 1], [0, 0]], dtype=complex)
CREATION = ANNIHILATION.conj().T

FIELD_DIM = 2


def kron(*operators: np.ndarray) -> np.ndarray:
    return reduce(np.kron, operators)


def unit_influence(t, theta: float):
    return np.ones_like(np.asarray(t, dtype=float))


def scaled_influence(t, theta: float):
    return theta * np.ones_like(np.asarray(t, dtype=float))


def drift_influence(t, theta: float, epsilon: float):
    """f_0(t; theta) = 1 - epsilon * theta * cos(t)"""
    return 1.0 - epsilon * theta * np.cos(np.asarray(t, dtype=float))


def _controlled(label: str, matrix: np.ndarray, index: int, influence=unit_influence,
                theta: float = 0.0) -> HamiltonianTerm:
    return HamiltonianTerm(label=label, matrix=matrix, kind=TermKind.CONTROLLED,
                           control_index=index, influence=influence, theta=theta)


def _free(label: str, matrix: np.ndarray, influence=unit_influence, theta: float = 0.0) -> HamiltonianTerm:
    return HamiltonianTerm(label=label, matrix=matrix, kind=TermKind.FREE, influence=influence, theta=theta)


def _control_box(physics: PhysicsConfig, n_controls: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.full(n_controls, -physics.control_bound), np.full(n_controls, physics.control_bound)


def build_q1(physics: Optional[PhysicsConfig] = None) -> ControlProblem:
    """State preparation in a V-type three-level system"""
    physics = physics or PhysicsConfig()

    h0 = np.diag([1.5, 1.0, 1.0]).astype(complex)
    h1 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
    h2 = np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex)
    h3 = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex)
    h4 = np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex)

    terms = [
        _free("H0", h0, partial(drift_influence, epsilon=physics.epsilon), theta=physics.theta0),
        _controlled("H1", h1, 0),
        _controlled("H2", h2, 1),
        _controlled("H3", h3, 2),
        _controlled("H4", h4, 3),
    ]
    lower, upper = _control_box(physics, 4)
    return ControlProblem(
        name=ProblemName.Q1, dim=3, n_controls=4, n_samples=10, T=physics.T,
        control_lower=lower, control_upper=upper, terms=terms,
        psi0=np.array([1, 0, 0], dtype=complex),
        target=np.array([0, 1, 1], dtype=complex) / np.sqrt(2),
        theta=np.array([physics.theta0, 0.0, 0.0, 0.0, 0.0]),
        fidelity_mode=FidelityMode.PURE, norm=physics.norm, renormalize=physics.renormalize,
    )


def build_q2(physics: Optional[PhysicsConfig] = None) -> ControlProblem:
    """Two coupled superconducting qubits driven to a maximally entangled state"""
    physics = physics or PhysicsConfig()
    theta = np.asarray(physics.theta, dtype=float)

    operators = [
        ("sz(1) I(2)", +kron(SIGMA_Z, IDENTITY_2)),
        ("sz(1) sz(2)", +kron(SIGMA_Z, SIGMA_Z)),
        ("sx(1) I(2)", -kron(SIGMA_X, IDENTITY_2)),
        ("sx(1) sz(2)", -kron(SIGMA_X, SIGMA_Z)),
        ("sy(1) sy(2)", -kron(SIGMA_Y, SIGMA_Y)),
    ]
    terms = [
        _controlled(label, matrix, m, scaled_influence, theta=theta[m])
        for m, (label, matrix) in enumerate(operators)
    ]
    lower, upper = _control_box(physics, 5)
    return ControlProblem(
        name=ProblemName.Q2, dim=4, n_controls=5, n_samples=7, T=physics.T,
        control_lower=lower, control_upper=upper, terms=terms,
        psi0=np.array([1, 0, 0, 0], dtype=complex),
        target=np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
        theta=theta, fidelity_mode=FidelityMode.PURE,
        norm=physics.norm, renormalize=physics.renormalize,
    )


def build_q3(physics: Optional[PhysicsConfig] = None) -> ControlProblem:
    """Two two-level atoms coupled to a cavity mode; ordering atom1 x atom2 x field"""
    physics = physics or PhysicsConfig()
    eye = IDENTITY_2

    sz1, sz2 = kron(SIGMA_Z, eye, eye), kron(eye, SIGMA_Z, eye)
    sp1, sm1 = kron(SIGMA_PLUS, eye, eye), kron(SIGMA_MINUS, eye, eye)
    sp2, sm2 = kron(eye, SIGMA_PLUS, eye), kron(eye, SIGMA_MINUS, eye)
    a, a_dag = kron(eye, eye, ANNIHILATION), kron(eye, eye, CREATION)
    number = a_dag @ a

    exchange_12 = sp1 @ sm2
    exchange_21 = sp2 @ sm1
    coupling_1 = a_dag @ sm1 + a @ sp1
    coupling_2 = a_dag @ sm2 + a @ sp2

    h_atoms_field = 0.5 * (physics.omega_a1 * sz1 + physics.omega_a2 * sz2) + physics.omega_r * number
    h_interaction = (physics.dipole_12 * exchange_12 + physics.dipole_21 * exchange_21
                     + physics.nu_1 * coupling_1 + physics.nu_2 * coupling_2)
    # Hermitian part; identical to the printed sum when dipole_12 == dipole_21
    h_interaction = 0.5 * (h_interaction + h_interaction.conj().T)

    operators = [
        ("sz(1)", sz1),
        ("sz(2)", sz2),
        ("a+a", number),
        ("s+(1)s-(2) + h.c.", exchange_12 + exchange_12.conj().T),
        ("s+(2)s-(1) + h.c.", exchange_21 + exchange_21.conj().T),
        ("a+s-(1) + a s+(1)", coupling_1),
        ("a+s-(2) + a s+(2)", coupling_2),
    ]
    terms = [_free("H0", h_atoms_field), _free("HI", h_interaction)]
    terms += [_controlled(label, matrix, m) for m, (label, matrix) in enumerate(operators)]

    psi0 = np.zeros(8, dtype=complex)
    psi0[physics.field_photons] = 1.0  # |g1 g2> x |n>
    atomic_target = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)

    lower, upper = _control_box(physics, 7)
    return ControlProblem(
        name=ProblemName.Q3, dim=8, n_controls=7, n_samples=6, T=physics.T,
        control_lower=lower, control_upper=upper, terms=terms,
        psi0=psi0, target=density_from_state(atomic_target),
        theta=np.zeros(9), fidelity_mode=FidelityMode.MIXED, reduction=Reduction.TRACE_OUT_FIELD,
        norm=physics.norm, renormalize=physics.renormalize,
    )


def fine_grid(T: float, n_samples: int, alpha: int) -> np.ndarray:
    """alpha*N + 1 uniform points spanning [0, T], both endpoints included"""
    if alpha < 1:
        raise ConfigurationError(f"alpha must be >= 1, got {alpha}")
    steps = alpha * n_samples
    return np.arange(steps + 1) * (T / steps)


def decode_position(position: np.ndarray, problem: ControlProblem) -> np.ndarray:
    position = np.asarray(position, dtype=float)
    if position.size != problem.dimension:
        raise ValueError(f"{problem.name.value}: position has {position.size} entries, expected {problem.dimension}")
    return position.reshape(problem.n_controls, problem.n_samples)


def spline_upsample(coarse: np.ndarray, alpha: int, T: float,
                    lower: Optional[np.ndarray] = None,
                    upper: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Upsample N coarse samples per control onto the fine grid.

    Samples sit at t_j = j*T/N for j < N. A natural cubic spline covers
    [0, t_{N-1}]; the last sample is held on (t_{N-1}, T]. Returns
    (times, fine) with fine shaped (M, alpha*N + 1), clamped to the bounds.
    """
    coarse = np.atleast_2d(np.asarray(coarse, dtype=float))
    n_controls, n_samples = coarse.shape
    if n_samples < 1:
        raise ConfigurationError("at least one coarse sample per control is required")
    times = fine_grid(T, n_samples, alpha)
    knots = np.arange(n_samples) * (T / n_samples)

    last_knot = alpha * (n_samples - 1)
    fine = np.repeat(coarse[:, -1:], times.size, axis=1)
    if n_controls and n_samples >= 3:
        spline = CubicSpline(knots, coarse, axis=1, bc_type="natural")
        fine[:, :last_knot + 1] = spline(times[:last_knot + 1])
    elif n_controls and n_samples == 2:
        for m in range(n_controls):
            fine[m, :last_knot + 1] = np.interp(times[:last_knot + 1], knots, coarse[m])

    # exact at the knots regardless of floating-point grid placement
    fine[:, ::alpha][:, :n_samples] = coarse

    if lower is not None or upper is not None:
        lo = -np.inf if lower is None else np.asarray(lower, dtype=float)[:, None]
        hi = np.inf if upper is None else np.asarray(upper, dtype=float)[:, None]
        fine = np.clip(fine, lo, hi)
    return times, fine


def assemble_hamiltonian(problem: ControlProblem, u_fine: np.ndarray, t: float) -> np.ndarray:
    """H(t) = sum_m u_m f_m(t) H_m + sum_f f_f(t) H_f"""
    u_fine = np.asarray(u_fine, dtype=float)
    hamiltonian = np.zeros((problem.dim, problem.dim), dtype=complex)
    for term in problem.controlled_terms:
        hamiltonian += u_fine[term.control_index] * float(term.influence(t, term.theta)) * term.matrix
    for term in problem.free_terms:
        hamiltonian += float(term.influence(t, term.theta)) * term.matrix
    return hamiltonian


def hamiltonian_series(problem: ControlProblem, fine_controls: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Vectorized H(t_k) for every fine grid point, shape (K, d, d)"""
    fine_controls = np.atleast_2d(np.asarray(fine_controls, dtype=float))
    matrices, coefficients = [], []
    for term in problem.controlled_terms:
        matrices.append(term.matrix)
        coefficients.append(fine_controls[term.control_index] * term.influence(times, term.theta))
    for term in problem.free_terms:
        matrices.append(term.matrix)
        coefficients.append(term.influence(times, term.theta))
    if not matrices:
        return np.zeros((times.size, problem.dim, problem.dim), dtype=complex)
    return np.einsum("nk,nij->kij", np.asarray(coefficients), np.asarray(matrices))


def euler_steps(hamiltonians: np.ndarray, psi0: QuantumState, dt: float,
                renormalize: bool = False) -> np.ndarray:
    """psi_{k+1} = psi_k - i H(t_k) psi_k dt, one step per interval"""
    states = np.empty((hamiltonians.shape[0] + 1, psi0.size), dtype=complex)
    states[0] = psi0
    psi = np.asarray(psi0, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for k, hamiltonian in enumerate(hamiltonians):
            psi = psi - 1j * dt * (hamiltonian @ psi)
            if renormalize:
                psi = psi / np.linalg.norm(psi)
            states[k + 1] = psi
    if not np.all(np.isfinite(states)):
        raise PropagationError("Euler propagation produced non-finite amplitudes")
    return states


def unitary_steps(hamiltonians: np.ndarray, psi0: QuantumState, dt: float) -> np.ndarray:
    """psi_{k+1} = exp(-i H(t_k) dt) psi_k via Hermitian eigen-decomposition"""
    states = np.empty((hamiltonians.shape[0] + 1, psi0.size), dtype=complex)
    states[0] = psi0
    if hamiltonians.shape[0] == 0:
        return states
    eigenvalues, eigenvectors = np.linalg.eigh(hamiltonians)
    psi = np.asarray(psi0, dtype=complex)
    for k in range(hamiltonians.shape[0]):
        vectors = eigenvectors[k]
        psi = vectors @ (np.exp(-1j * eigenvalues[k] * dt) * (vectors.conj().T @ psi))
        states[k + 1] = psi
    return states


def _grid_for(problem: ControlProblem, fine_controls: np.ndarray) -> np.ndarray:
    n_points = np.atleast_2d(fine_controls).shape[1]
    return np.linspace(0.0, problem.T, n_points)


def propagate_euler(problem: ControlProblem, fine_controls: np.ndarray,
                    times: Optional[np.ndarray] = None) -> Trajectory:
    times = _grid_for(problem, fine_controls) if times is None else times
    dt = problem.T / (times.size - 1)
    hamiltonians = hamiltonian_series(problem, fine_controls, times)[:-1]
    states = euler_steps(hamiltonians, problem.psi0, dt, renormalize=problem.renormalize)
    return Trajectory(times=times, states=states)


def propagate_expm_oracle(problem: ControlProblem, fine_controls: np.ndarray,
                          times: Optional[np.ndarray] = None) -> Trajectory:
    times = _grid_for(problem, fine_controls) if times is None else times
    dt = problem.T / (times.size - 1)
    hamiltonians = hamiltonian_series(problem, fine_controls, times)[:-1]
    return Trajectory(times=times, states=unitary_steps(hamiltonians, problem.psi0, dt))


def density_from_state(psi: QuantumState) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def partial_trace_field(psi: QuantumState) -> DensityMatrix:
    """Reduced atomic density matrix of an atom1 x atom2 x field state"""
    psi = np.asarray(psi, dtype=complex)
    if psi.size != 4 * FIELD_DIM:
        raise ValueError(f"expected a state of dimension {4 * FIELD_DIM}, got {psi.size}")
    amplitudes = psi.reshape(4, FIELD_DIM)
    return amplitudes @ amplitudes.conj().T


def reduced_state(problem: ControlProblem, psi: QuantumState) -> DensityMatrix:
    if problem.reduction == Reduction.TRACE_OUT_FIELD:
        return partial_trace_field(psi)
    return density_from_state(psi)
