import logging
from abc import ABC, abstractmethod
from typing import List, Optional, Tuple

import numpy as np

from ..models import (
    Bounds, ControlProblem, EvaluationRecord, FidelityMode, MatrixNorm, ProblemName,
    Trajectory, QuantumState, DensityMatrix,
)
from ..utils.errors import EvaluationError
from .quantum_service import (
    decode_position, spline_upsample, propagate_euler, propagate_expm_oracle, reduced_state,
)

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-10
# round-off eigenvalues below this are treated as exact zeros before square roots
EIGENVALUE_FLOOR = 1e-13
QUANTUM_OBJECTIVE_NAMES = ("deviation", "energy", "smoothness")


def _normalized(state: QuantumState) -> QuantumState:
    state = np.asarray(state, dtype=complex)
    norm = np.linalg.norm(state)
    if not np.isfinite(norm) or norm == 0.0:
        raise EvaluationError("final state has zero or non-finite norm")
    return state / norm


def _check_dimensions(a: np.ndarray, b: np.ndarray) -> None:
    if np.shape(a) != np.shape(b):
        raise ValueError(f"dimension mismatch: {np.shape(a)} vs {np.shape(b)}")


def fidelity_pure(final: QuantumState, target: QuantumState) -> float:
    """|<final|target>|^2 on the normalized final state"""
    _check_dimensions(final, target)
    overlap = np.vdot(_normalized(final), np.asarray(target, dtype=complex))
    return float(min(abs(overlap) ** 2, 1.0))


def deviation_pure(final: QuantumState, target: QuantumState) -> float:
    _check_dimensions(final, target)
    return float(np.linalg.norm(_normalized(final) - np.asarray(target, dtype=complex)))


def _hermitian_sqrt(rho: DensityMatrix) -> np.ndarray:
    eigenvalues, eigenvectors = np.linalg.eigh(rho)
    if eigenvalues.min() < -PSD_TOLERANCE:
        raise EvaluationError(f"density matrix is not positive semidefinite (eigenvalue {eigenvalues.min():.3e})")
    roots = np.sqrt(np.where(eigenvalues < EIGENVALUE_FLOOR, 0.0, eigenvalues))
    return (eigenvectors * roots) @ eigenvectors.conj().T


def fidelity_mixed(rho: DensityMatrix, rho_target: DensityMatrix) -> float:
    """
    Uhlmann expression Tr sqrt(sqrt(rho) rho_target sqrt(rho)).

    Both arguments must be positive semidefinite within PSD_TOLERANCE;
    eigenvalues under EIGENVALUE_FLOOR count as zero before every square root.
    """
    rho = np.asarray(rho, dtype=complex)
    rho_target = np.asarray(rho_target, dtype=complex)
    _check_dimensions(rho, rho_target)
    _hermitian_sqrt(rho_target)

    root = _hermitian_sqrt(rho)
    product = root @ rho_target @ root
    product = 0.5 * (product + product.conj().T)
    eigenvalues = np.linalg.eigvalsh(product)
    return float(np.sum(np.sqrt(np.where(eigenvalues < EIGENVALUE_FLOOR, 0.0, eigenvalues))))


def deviation_mixed(rho: DensityMatrix, rho_target: DensityMatrix) -> float:
    _check_dimensions(rho, rho_target)
    return float(np.linalg.norm(np.asarray(rho) - np.asarray(rho_target), "fro"))


def term_norms(problem: ControlProblem) -> np.ndarray:
    """||H_m|| per control, Frobenius or spectral per problem setting"""
    order = "fro" if problem.norm == MatrixNorm.FROBENIUS else 2
    return np.array([np.linalg.norm(term.matrix, order) for term in problem.controlled_terms])


def _weighted_magnitudes(fine_controls: np.ndarray, problem: ControlProblem) -> np.ndarray:
    fine_controls = np.atleast_2d(np.asarray(fine_controls, dtype=float))
    return np.abs(fine_controls) * term_norms(problem)[:, None]


def _fine_step(fine_controls: np.ndarray, problem: ControlProblem) -> float:
    n_points = np.atleast_2d(fine_controls).shape[1]
    if n_points < 2:
        raise ValueError("fine grid needs at least two points")
    return problem.T / (n_points - 1)


def energy(fine_controls: np.ndarray, problem: ControlProblem) -> float:
    """Left-endpoint sum of |u_m(t_k)| ||H_m|| dt over the first alpha*N points"""
    dt = _fine_step(fine_controls, problem)
    return float(np.sum(_weighted_magnitudes(fine_controls, problem)[:, :-1]) * dt)


def smoothness(fine_controls: np.ndarray, problem: ControlProblem) -> float:
    """Sum of squared finite-difference slopes of |u_m| ||H_m||, times dt"""
    dt = _fine_step(fine_controls, problem)
    slopes = np.diff(_weighted_magnitudes(fine_controls, problem), axis=1) / dt
    return float(np.sum(slopes ** 2) * dt)


def fine_controls_for(position: np.ndarray, problem: ControlProblem, alpha: int) -> Tuple[np.ndarray, np.ndarray]:
    coarse = decode_position(position, problem)
    return spline_upsample(coarse, alpha, problem.T, problem.control_lower, problem.control_upper)


def evaluate_quantum(position: np.ndarray, problem: ControlProblem, K: int, alpha: int = 30) -> EvaluationRecord:
    if K not in (2, 3):
        raise ValueError(f"quantum problems support 2 or 3 objectives, got {K}")

    times, fine = fine_controls_for(position, problem, alpha)
    final = propagate_euler(problem, fine, times).final_state
    terminal_norm = float(np.linalg.norm(final))

    if problem.fidelity_mode == FidelityMode.PURE:
        deviation = deviation_pure(final, problem.target)
        fidelity = fidelity_pure(final, problem.target)
    else:
        rho = reduced_state(problem, _normalized(final))
        deviation = deviation_mixed(rho, problem.target)
        fidelity = fidelity_mixed(rho, problem.target)

    objectives = [deviation, energy(fine, problem)]
    if K == 3:
        objectives.append(smoothness(fine, problem))
    return EvaluationRecord(objectives=objectives, fidelity=fidelity, terminal_norm=terminal_norm)


class ObjectiveBundle(ABC):
    """Anything the optimizer can search: a box, a name per objective and evaluate()"""

    name: ProblemName
    description: str = ""

    @property
    @abstractmethod
    def bounds(self) -> Bounds:
        ...

    @property
    @abstractmethod
    def objective_names(self) -> List[str]:
        ...

    @abstractmethod
    def evaluate(self, position: np.ndarray) -> EvaluationRecord:
        ...

    @property
    def dimension(self) -> int:
        return self.bounds.dimension

    @property
    def n_objectives(self) -> int:
        return len(self.objective_names)

    @property
    def is_quantum(self) -> bool:
        return self.name.is_quantum


class QuantumObjective(ObjectiveBundle):
    def __init__(self, problem: ControlProblem, K: int = 2, alpha: int = 30, description: str = ""):
        if K not in (2, 3):
            raise ValueError(f"quantum problems support 2 or 3 objectives, got {K}")
        self.problem = problem
        self.name = problem.name
        self.K = K
        self.alpha = alpha
        self.description = description

    @property
    def bounds(self) -> Bounds:
        return self.problem.bounds

    @property
    def objective_names(self) -> List[str]:
        return list(QUANTUM_OBJECTIVE_NAMES[:self.K])

    def evaluate(self, position: np.ndarray) -> EvaluationRecord:
        return evaluate_quantum(position, self.problem, self.K, self.alpha)

    def controls(self, position: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(times, u_m(t_k), U_m(t_k) = |u_m| ||H_m||) on the fine grid"""
        times, fine = fine_controls_for(position, self.problem, self.alpha)
        return times, fine, _weighted_magnitudes(fine, self.problem)

    def trajectories(self, position: np.ndarray) -> Tuple[Optional[Trajectory], Trajectory]:
        """Euler and oracle trajectories; the Euler side is None if it diverges"""
        times, fine = fine_controls_for(position, self.problem, self.alpha)
        oracle = propagate_expm_oracle(self.problem, fine, times)
        try:
            euler = propagate_euler(self.problem, fine, times)
        except EvaluationError as e:
            logger.warning(f"Euler trajectory unavailable for export: {e}")
            euler = None
        return euler, oracle
