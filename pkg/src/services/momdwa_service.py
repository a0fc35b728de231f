import asyncio
import logging
from typing import List, Tuple, Sequence, Optional, Any

import numpy as np

from ..models import Bounds, Particle, MomdwaParams, EvaluationRecord, HistoryRow
from ..utils.errors import ConfigurationError, EvaluationError
from ..utils.helpers import RandomStreams
from .pareto_service import Repository, update_repository, select_leader

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-12
MAX_BB_REDRAWS = 8

# Failures that quarantine a particle instead of aborting the run
QUARANTINE_ERRORS = (EvaluationError, ArithmeticError, np.linalg.LinAlgError)


def initialize_population(bounds: Bounds, Np: int, rng: np.random.Generator) -> List[Particle]:
    """Uniform positions inside the box; objectives left pending"""
    if Np < 1:
        raise ConfigurationError(f"population_size must be >= 1, got {Np}")
    lower = np.asarray(bounds.lower, dtype=float)
    upper = np.asarray(bounds.upper, dtype=float)
    if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1 or np.any(lower > upper):
        raise ConfigurationError("invalid bounds: lower/upper must be equal-length with lower <= upper")

    positions = lower + (upper - lower) * rng.random((Np, lower.size))
    return [Particle(position=row) for row in positions]


def damped_wave_move(pos_ij, best_j, a, bb, gg, r):
    return a / (bb + pos_ij) * np.sin(2.0 * np.pi / gg * pos_ij) + r * best_j


def guided_move(best_j, gen: int, decay_base: float, r):
    return best_j + r * decay_base ** gen


def _draw_gg(rng: np.random.Generator, params: MomdwaParams, size: int) -> np.ndarray:
    # 1 - U(0,1) lies in (0, 1], so gg never reaches the exclusive lower end
    return params.gg_low + (params.gg_high - params.gg_low) * (1.0 - rng.random(size))


def update_position(particle: Particle, leader: Particle, gen: int, params: MomdwaParams,
                    rng: np.random.Generator) -> np.ndarray:
    """
    Raw (pre-boundary) position of one particle.

    Draw order per call: r_sel (D values), r (D values), then bb and gg for the
    damped-wave coordinates, then any bb re-draws.
    """
    pos = np.asarray(particle.position, dtype=float)
    best = np.asarray(leader.position, dtype=float)
    d = pos.size

    r_sel = rng.random(d)
    r = rng.random(d)
    new = guided_move(best, gen, params.decay_base, r)

    wave = np.flatnonzero(r_sel < params.threshold)
    if wave.size == 0:
        return new

    bb = rng.uniform(params.bb_low, params.bb_high, wave.size)
    gg = _draw_gg(rng, params, wave.size)
    singular = np.abs(bb + pos[wave]) < SINGULAR_TOL
    for _ in range(MAX_BB_REDRAWS):
        if not singular.any():
            break
        bb[singular] = rng.uniform(params.bb_low, params.bb_high, int(singular.sum()))
        singular = np.abs(bb + pos[wave]) < SINGULAR_TOL

    # coordinates still singular keep their guided value
    ok = ~singular
    idx = wave[ok]
    new[idx] = damped_wave_move(pos[idx], best[idx], params.amplitude(gen), bb[ok], gg[ok], r[idx])
    return new


def handle_bounds(pos: np.ndarray, bounds: Bounds, threshold: float, rng: np.random.Generator) -> np.ndarray:
    """
    Dynamic-threshold boundary handling.

    r_b > threshold clamps to the violated bound; otherwise an out-of-bounds
    coordinate is re-sampled uniformly inside the box.
    """
    pos = np.asarray(pos, dtype=float)
    lower, upper = bounds.lower, bounds.upper
    out = pos.copy()

    r_b = rng.random(pos.size)
    clamp = r_b > threshold
    above = pos > upper
    below = pos < lower

    # "above upper and below lower" assigns upper + lower; unreachable while lower <= upper
    assert not np.any(clamp & above & below)
    out[clamp & above] = upper[clamp & above]
    out[clamp & below] = lower[clamp & below]

    resample = ~clamp & (above | below)
    if resample.any():
        span = upper[resample] - lower[resample]
        out[resample] = lower[resample] + span * rng.random(int(resample.sum()))
    return out


class MomdwaOptimizer:
    """Runs the damped-wave loop against any bundle exposing dimension, bounds and evaluate()"""

    def __init__(self, problem: Any, params: MomdwaParams, streams: RandomStreams,
                 run_context: Optional[dict] = None):
        self.problem = problem
        self.params = params
        self.streams = streams
        self.run_context = run_context or {}
        self.n_objectives = problem.n_objectives

    def optimize(self) -> Tuple[Repository, List[HistoryRow]]:
        params = self.params
        bounds = self.problem.bounds

        population = initialize_population(bounds, params.population_size, self.streams.init)
        population = self.evaluate_population([p.position for p in population])
        repository = update_repository(Repository(params.repository_capacity), population)
        if not repository.members:
            raise EvaluationError("no particle of the initial population evaluated to finite objectives")

        history = [self._history_row(0, repository)]
        self._log_progress(0, repository)

        for gen in range(1, params.max_generations + 1):
            # every draw happens here, serially, before evaluation is dispatched
            positions = []
            for particle in population:
                leader = select_leader(repository, self.streams.leader)
                raw = update_position(particle, leader, gen, params, self.streams.updates)
                positions.append(handle_bounds(raw, bounds, params.threshold, self.streams.boundary))

            population = self.evaluate_population(positions)
            repository = update_repository(repository, population)
            history.append(self._history_row(gen, repository))

            if gen % params.log_every == 0 or gen == params.max_generations:
                self._log_progress(gen, repository)

        return repository, history

    def evaluate_population(self, positions: Sequence[np.ndarray]) -> List[Particle]:
        if self.params.workers > 1:
            outcomes = asyncio.run(self._evaluate_concurrently(positions))
        else:
            outcomes = []
            for position in positions:
                try:
                    outcomes.append(self.problem.evaluate(position))
                except QUARANTINE_ERRORS as e:
                    outcomes.append(e)
        return [self._to_particle(position, outcome) for position, outcome in zip(positions, outcomes)]

    async def _evaluate_concurrently(self, positions: Sequence[np.ndarray]) -> List[Any]:
        semaphore = asyncio.Semaphore(self.params.workers)

        async def evaluate_one(position):
            async with semaphore:
                return await asyncio.to_thread(self.problem.evaluate, position)

        # gather keeps submission order, so scheduling never changes the result
        outcomes = await asyncio.gather(*(evaluate_one(p) for p in positions), return_exceptions=True)
        for outcome in outcomes:
            if isinstance(outcome, Exception) and not isinstance(outcome, QUARANTINE_ERRORS):
                raise outcome
        return outcomes

    def _to_particle(self, position: np.ndarray, outcome: Any) -> Particle:
        if isinstance(outcome, EvaluationRecord) and outcome.is_finite:
            return Particle(
                position=np.asarray(position, dtype=float),
                objectives=np.asarray(outcome.objectives, dtype=float),
                fidelity=outcome.fidelity,
                terminal_norm=outcome.terminal_norm,
            )

        reason = str(outcome) if isinstance(outcome, Exception) else "non-finite objectives"
        logger.warning(f"Quarantined particle: {reason}", extra=self.run_context)
        return Particle(
            position=np.asarray(position, dtype=float),
            objectives=np.full(self.n_objectives, np.inf),
            quarantined=True,
        )

    def _history_row(self, generation: int, repository: Repository) -> HistoryRow:
        return HistoryRow(
            generation=generation,
            repository_size=len(repository),
            objective_minima=repository.objective_minima(),
            best_fidelity=repository.best_fidelity(),
        )

    def _log_progress(self, generation: int, repository: Repository) -> None:
        minima = ", ".join(f"{v:.6g}" for v in repository.objective_minima())
        logger.info(
            f"Generation {generation}: repository size {len(repository)}, objective minima [{minima}]",
            extra={**self.run_context, "generation": generation},
        )


def optimize(problem: Any, params: MomdwaParams, rng: RandomStreams,
             run_context: Optional[dict] = None) -> Tuple[Repository, List[HistoryRow]]:
    return MomdwaOptimizer(problem, params, rng, run_context).optimize()
