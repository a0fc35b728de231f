from pathlib import Path
from typing import List, Optional, Callable
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, ConfigDict, field_validator, model_validator


# Quantum states are complex vectors, density matrices complex square matrices.
QuantumState = np.ndarray
DensityMatrix = np.ndarray


class ProblemName(str, Enum):
    Q1 = "q1"
    Q2 = "q2"
    Q3 = "q3"
    SCHAFFER = "schaffer"
    FONSECA = "fonseca"
    ZDT1 = "zdt1"

    @property
    def is_quantum(self) -> bool:
        return self in (ProblemName.Q1, ProblemName.Q2, ProblemName.Q3)


# Quantum problems use the published algorithm parameters; benchmarks are sized for quick checks.
OPTIMIZER_DEFAULTS = {
    ProblemName.Q1: {"population_size": 100, "repository_capacity": 100, "max_generations": 500},
    ProblemName.Q2: {"population_size": 100, "repository_capacity": 100, "max_generations": 500},
    ProblemName.Q3: {"population_size": 100, "repository_capacity": 100, "max_generations": 500},
    ProblemName.SCHAFFER: {"population_size": 50, "repository_capacity": 100, "max_generations": 100},
    ProblemName.FONSECA: {"population_size": 100, "repository_capacity": 100, "max_generations": 200},
    ProblemName.ZDT1: {"population_size": 100, "repository_capacity": 100, "max_generations": 250},
}


class FidelityMode(str, Enum):
    PURE = "pure"
    MIXED = "mixed"


class Reduction(str, Enum):
    NONE = "none"
    TRACE_OUT_FIELD = "trace-out-field"


class TermKind(str, Enum):
    CONTROLLED = "controlled"
    FREE = "free"


class MatrixNorm(str, Enum):
    FROBENIUS = "frobenius"
    SPECTRAL = "spectral"


class Bounds(BaseModel):
    """Per-dimension box bounds of the search space"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lower: np.ndarray
    upper: np.ndarray

    @field_validator("lower", "upper", mode="before")
    @classmethod
    def _as_float_vector(cls, value):
        return np.atleast_1d(np.asarray(value, dtype=float))

    @model_validator(mode="after")
    def _check_shape(self):
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape or self.lower.size < 1:
            raise ValueError("bounds lower/upper must be equal-length vectors of length >= 1")
        if np.any(self.lower > self.upper):
            raise ValueError("bounds lower must not exceed upper")
        return self

    @classmethod
    def uniform(cls, low: float, high: float, dimension: int) -> "Bounds":
        return cls(lower=np.full(dimension, low), upper=np.full(dimension, high))

    @property
    def dimension(self) -> int:
        return int(self.lower.size)

    def contains(self, position: np.ndarray) -> bool:
        return bool(np.all(position >= self.lower) and np.all(position <= self.upper))


class MomdwaParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    population_size: int = Field(100, ge=1)
    max_generations: int = Field(500, ge=0)
    threshold: float = Field(0.02, gt=0.0, lt=1.0)
    bb_low: float = -2.0
    bb_high: float = 2.0
    gg_low: float = Field(0.0, ge=0.0)
    gg_high: float = Field(1.0, gt=0.0)
    amplitude_a: float = Field(1.0, gt=0.0)
    decay_base: float = Field(0.95, gt=0.0, lt=1.0)
    repository_capacity: int = Field(100, ge=1)
    workers: int = Field(1, ge=1)
    log_every: int = Field(50, ge=1)

    @model_validator(mode="after")
    def _check_ranges(self):
        if self.bb_low > self.bb_high:
            raise ValueError("bb_low must not exceed bb_high")
        if self.gg_low >= self.gg_high:
            raise ValueError("gg_low must be below gg_high")
        return self

    def amplitude(self, generation: int) -> float:
        """Linearly damped amplitude `a`: amplitude_a at generation 0, 0 at max_generations"""
        if self.max_generations <= 0:
            return self.amplitude_a
        return self.amplitude_a * max(0.0, 1.0 - generation / self.max_generations)


class Particle(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    position: np.ndarray
    objectives: Optional[np.ndarray] = None
    fidelity: Optional[float] = None
    terminal_norm: Optional[float] = None
    quarantined: bool = False

    @property
    def evaluated(self) -> bool:
        return self.objectives is not None


class EvaluationRecord(BaseModel):
    objectives: List[float]
    fidelity: Optional[float] = None
    terminal_norm: Optional[float] = None

    @property
    def is_finite(self) -> bool:
        values = list(self.objectives)
        if self.fidelity is not None:
            values.append(self.fidelity)
        return bool(np.all(np.isfinite(values)))


class HistoryRow(BaseModel):
    generation: int
    repository_size: int
    objective_minima: List[float]
    best_fidelity: Optional[float] = None


class HamiltonianTerm(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    label: str
    matrix: np.ndarray
    kind: TermKind
    control_index: Optional[int] = None
    theta: float = 0.0
    # influence(t, theta) -> multiplicative factor, vectorized over t
    influence: Callable[[np.ndarray, float], np.ndarray]

    @model_validator(mode="after")
    def _check_term(self):
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=1e-12):
            raise ValueError(f"term {self.label} is not Hermitian")
        if (self.kind == TermKind.CONTROLLED) != (self.control_index is not None):
            raise ValueError(f"term {self.label}: control_index is required exactly for controlled terms")
        return self


class ControlProblem(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: ProblemName
    dim: int
    n_controls: int
    n_samples: int
    T: float = Field(gt=0.0)
    control_lower: np.ndarray
    control_upper: np.ndarray
    terms: List[HamiltonianTerm]
    psi0: np.ndarray
    target: np.ndarray
    theta: np.ndarray
    fidelity_mode: FidelityMode = FidelityMode.PURE
    reduction: Reduction = Reduction.NONE
    norm: MatrixNorm = MatrixNorm.FROBENIUS
    renormalize: bool = False

    @model_validator(mode="after")
    def _check_problem(self):
        controlled = [t for t in self.terms if t.kind == TermKind.CONTROLLED]
        if sorted(t.control_index for t in controlled) != list(range(self.n_controls)):
            raise ValueError(f"{self.name.value}: expected one controlled term per control index")
        if self.control_lower.shape != (self.n_controls,) or self.control_upper.shape != (self.n_controls,):
            raise ValueError(f"{self.name.value}: control bounds must have one entry per control")
        if abs(np.linalg.norm(self.psi0) - 1.0) > 1e-12:
            raise ValueError(f"{self.name.value}: initial state is not normalized")
        if self.target.ndim == 1:
            norm_ok = abs(np.linalg.norm(self.target) - 1.0) <= 1e-12
        else:
            norm_ok = abs(np.trace(self.target).real - 1.0) <= 1e-10
        if not norm_ok:
            raise ValueError(f"{self.name.value}: target is not normalized")
        return self

    @property
    def dimension(self) -> int:
        return self.n_controls * self.n_samples

    @property
    def controlled_terms(self) -> List[HamiltonianTerm]:
        return sorted((t for t in self.terms if t.kind == TermKind.CONTROLLED), key=lambda t: t.control_index)

    @property
    def free_terms(self) -> List[HamiltonianTerm]:
        return [t for t in self.terms if t.kind == TermKind.FREE]

    @property
    def bounds(self) -> Bounds:
        # control-major layout: all samples of u_1, then u_2, ...
        return Bounds(
            lower=np.repeat(self.control_lower, self.n_samples),
            upper=np.repeat(self.control_upper, self.n_samples),
        )


class Trajectory(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    states: np.ndarray

    @property
    def final_state(self) -> QuantumState:
        return self.states[-1]


class TopsisWeights(BaseModel):
    weights: List[float] = Field(min_length=1)

    @field_validator("weights")
    @classmethod
    def _positive(cls, value: List[float]) -> List[float]:
        if any(w <= 0 for w in value):
            raise ValueError("TOPSIS weights must all be positive")
        return value


class DecisionReport(BaseModel):
    screened_count: int
    scores: List[float]
    selected_index: int
    selected_score: float


class PhysicsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    T: float = Field(1.0, gt=0.0)
    control_bound: float = Field(5.0, gt=0.0)
    epsilon: float = 0.1
    theta0: float = 0.0
    theta: List[float] = Field(default_factory=lambda: [1.0] * 5, min_length=5, max_length=5)
    omega_a1: float = 1.0
    omega_a2: float = 1.0
    omega_r: float = 1.0
    dipole_12: float = 0.1
    dipole_21: float = 0.1
    nu_1: float = 0.1
    nu_2: float = 0.1
    # initial cavity photon number for q3 (0 = vacuum)
    field_photons: int = Field(0, ge=0, le=1)
    norm: MatrixNorm = MatrixNorm.FROBENIUS
    renormalize: bool = False


class DecisionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epsilon_fidelity: float = Field(0.995, ge=0.0, le=1.0)
    topsis_weights: Optional[List[float]] = None


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    problem: ProblemName
    objectives: int = Field(2, ge=2, le=3)
    seed: int = Field(ge=0, lt=2 ** 64)
    alpha: int = Field(30, ge=1)
    optimizer: MomdwaParams = Field(default_factory=MomdwaParams)
    physics: PhysicsConfig = Field(default_factory=PhysicsConfig)
    decision: DecisionConfig = Field(default_factory=DecisionConfig)
    output_dir: Path = Path("runs")

    @model_validator(mode="after")
    def _check_objectives(self):
        if not self.problem.is_quantum and self.objectives != 2:
            raise ValueError(f"objectives: benchmark problem {self.problem.value} has exactly 2 objectives")
        weights = self.decision.topsis_weights
        if weights is not None:
            TopsisWeights(weights=weights)
            if len(weights) != self.objectives:
                raise ValueError(
                    f"topsis_weights: {len(weights)} weights given for {self.objectives} objectives"
                )
        return self

    @property
    def run_id(self) -> str:
        return f"{self.problem.value}-k{self.objectives}-s{self.seed}"

    def resolved_weights(self) -> TopsisWeights:
        if self.decision.topsis_weights is not None:
            return TopsisWeights(weights=self.decision.topsis_weights)
        if not self.problem.is_quantum:
            return TopsisWeights(weights=[0.5, 0.5])
        return TopsisWeights(weights=[0.7, 0.3] if self.objectives == 2 else [0.6, 0.2, 0.2])


class RunSummary(BaseModel):
    run_id: str
    config: RunConfig
    objective_names: List[str]
    repository_size: int
    selected_member: int
    selected_objectives: List[float]
    selected_fidelity: Optional[float] = None
    selected_terminal_norm: Optional[float] = None
    decision: DecisionReport
    history: List[HistoryRow]
    duration_seconds: float


class ValidationCheck(BaseModel):
    name: str
    passed: bool
    detail: str
    duration_seconds: float = 0.0
