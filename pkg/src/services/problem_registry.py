import logging
from typing import Dict, List, Any, Optional

from ..models import ProblemName, PhysicsConfig, RunConfig
from ..utils.errors import ConfigurationError
from .objective_service import ObjectiveBundle, QuantumObjective
from .quantum_service import build_q1, build_q2, build_q3
from .benchmark_service import schaffer_problem, fonseca_problem, zdt1_problem

logger = logging.getLogger(__name__)


class ProblemRegistry:
    """Registry of the problems the optimizer can be pointed at"""

    def __init__(self):
        self._problems = {}
        self._register_problems()

    def _register_problems(self):
        """Register all available problems"""

        # Quantum control problems
        self._problems[ProblemName.Q1] = {
            "builder": build_q1,
            "description": "V-type three-level atom: prepare (|1> + |2>)/sqrt(2) from |0>",
            "dimension": 40,
        }
        self._problems[ProblemName.Q2] = {
            "builder": build_q2,
            "description": "Two coupled superconducting qubits: reach (|ge> + |eg>)/sqrt(2)",
            "dimension": 35,
        }
        self._problems[ProblemName.Q3] = {
            "builder": build_q3,
            "description": "Two atoms in a cavity: entangle the atoms, field traced out",
            "dimension": 42,
        }

        # Analytic benchmarks
        for factory in (schaffer_problem, fonseca_problem, zdt1_problem):
            bundle = factory()
            self._problems[bundle.name] = {
                "builder": factory,
                "description": bundle.description,
                "dimension": bundle.dimension,
            }

    def get_problem_descriptions(self) -> List[Dict[str, Any]]:
        """Return name, search dimension and description per problem"""
        return [
            {"name": name.value, "dimension": data["dimension"], "description": data["description"]}
            for name, data in self._problems.items()
        ]

    def build(self, name: ProblemName, objectives: int = 2, alpha: int = 30,
              physics: Optional[PhysicsConfig] = None,
              run_context: Optional[Dict[str, Any]] = None) -> ObjectiveBundle:
        """Build the evaluatable bundle for one problem"""
        try:
            name = ProblemName(name)
        except ValueError:
            raise ConfigurationError(f"Unknown problem: {name}")

        data = self._problems[name]
        extra_fields = {"problem": name.value, **(run_context or {})}
        if name.is_quantum:
            problem = data["builder"](physics or PhysicsConfig())
            bundle = QuantumObjective(problem, K=objectives, alpha=alpha, description=data["description"])
        else:
            if objectives != 2:
                raise ConfigurationError(f"objectives: benchmark problem {name.value} has exactly 2 objectives")
            bundle = data["builder"]()

        logger.info(
            f"Built problem {name.value}: D={bundle.dimension}, objectives {bundle.objective_names}",
            extra=extra_fields,
        )
        return bundle

    def build_for(self, config: RunConfig, run_context: Optional[Dict[str, Any]] = None) -> ObjectiveBundle:
        return self.build(config.problem, config.objectives, config.alpha, config.physics, run_context)
