"""
Analytic two-objective test problems with known Pareto fronts.

They exercise the optimizer without any quantum dynamics; none of them
records a fidelity, so decision screening is skipped for them.
"""

from abc import abstractmethod
from typing import List

import numpy as np

from ..models import Bounds, EvaluationRecord, ProblemName
from .objective_service import ObjectiveBundle

FONSECA_SHIFT = 1.0 / np.sqrt(3.0)


class BenchmarkProblem(ObjectiveBundle):
    lower: float
    upper: float
    D: int

    @property
    def bounds(self) -> Bounds:
        return Bounds.uniform(self.lower, self.upper, self.D)

    @property
    def objective_names(self) -> List[str]:
        return ["f1", "f2"]

    def evaluate(self, position: np.ndarray) -> EvaluationRecord:
        x = np.asarray(position, dtype=float)
        if x.size != self.D:
            raise ValueError(f"{self.name.value}: position has {x.size} entries, expected {self.D}")
        return EvaluationRecord(objectives=[float(v) for v in self.objectives(x)])

    @abstractmethod
    def objectives(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def analytic_front(self, n_points: int = 2001) -> np.ndarray:
        """Dense (n_points, 2) sampling of the true Pareto front"""
        ...

    def front_distance(self, objectives: np.ndarray, n_points: int = 20001) -> np.ndarray:
        """Euclidean distance of every objective row to the sampled analytic front"""
        objectives = np.atleast_2d(np.asarray(objectives, dtype=float))
        front = self.analytic_front(n_points)
        gaps = objectives[:, None, :] - front[None, :, :]
        return np.sqrt(np.min(np.sum(gaps ** 2, axis=2), axis=1))


class SchafferProblem(BenchmarkProblem):
    name = ProblemName.SCHAFFER
    description = "Schaffer N.1: f1 = x^2, f2 = (x - 2)^2 on [-1000, 1000]"
    lower, upper, D = -1000.0, 1000.0, 1

    def objectives(self, x: np.ndarray) -> np.ndarray:
        return np.array([x[0] ** 2, (x[0] - 2.0) ** 2])

    def analytic_front(self, n_points: int = 2001) -> np.ndarray:
        x = np.linspace(0.0, 2.0, n_points)
        return np.column_stack([x ** 2, (x - 2.0) ** 2])

    @staticmethod
    def front_gap(f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
        """|f2 - (sqrt(f1) - 2)^2|, zero exactly on the front"""
        return np.abs(np.asarray(f2) - (np.sqrt(np.asarray(f1)) - 2.0) ** 2)


class FonsecaProblem(BenchmarkProblem):
    name = ProblemName.FONSECA
    description = "Fonseca-Fleming: nonconvex front, D=3 on [-4, 4]^3"
    lower, upper, D = -4.0, 4.0, 3

    def objectives(self, x: np.ndarray) -> np.ndarray:
        f1 = 1.0 - np.exp(-np.sum((x + FONSECA_SHIFT) ** 2))
        f2 = 1.0 - np.exp(-np.sum((x - FONSECA_SHIFT) ** 2))
        return np.array([f1, f2])

    def analytic_front(self, n_points: int = 2001) -> np.ndarray:
        # Pareto set: x1 = x2 = x3 = s, s in [-1/sqrt(3), 1/sqrt(3)]
        s = np.linspace(-FONSECA_SHIFT, FONSECA_SHIFT, n_points)
        f1 = 1.0 - np.exp(-self.D * (s + FONSECA_SHIFT) ** 2)
        f2 = 1.0 - np.exp(-self.D * (s - FONSECA_SHIFT) ** 2)
        return np.column_stack([f1, f2])


class Zdt1Problem(BenchmarkProblem):
    name = ProblemName.ZDT1
    description = "ZDT1: convex front f2 = 1 - sqrt(f1), D=30 on [0, 1]^30"
    lower, upper, D = 0.0, 1.0, 30

    def objectives(self, x: np.ndarray) -> np.ndarray:
        f1 = x[0]
        g = 1.0 + 9.0 * np.sum(x[1:]) / (self.D - 1)
        return np.array([f1, g * (1.0 - np.sqrt(f1 / g))])

    def analytic_front(self, n_points: int = 2001) -> np.ndarray:
        f1 = np.linspace(0.0, 1.0, n_points)
        return np.column_stack([f1, 1.0 - np.sqrt(f1)])


def schaffer_problem() -> SchafferProblem:
    return SchafferProblem()


def fonseca_problem() -> FonsecaProblem:
    return FonsecaProblem()


def zdt1_problem() -> Zdt1Problem:
    return Zdt1Problem()
