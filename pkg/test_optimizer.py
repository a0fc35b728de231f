"""
Tests for the damped-wave optimizer: moves, boundary handling and the generation loop
"""

import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.models import Bounds, MomdwaParams, Particle, EvaluationRecord, ProblemName
from src.services.benchmark_service import SchafferProblem
from src.services.momdwa_service import (
    initialize_population, damped_wave_move, guided_move, update_position, handle_bounds,
    MomdwaOptimizer, optimize,
)
from src.services.pareto_service import non_dominated_mask
from src.services.problem_registry import ProblemRegistry
from src.utils.errors import ConfigurationError, EvaluationError
from src.utils.helpers import RandomStreams


def small_params(**overrides) -> MomdwaParams:
    values = {"population_size": 20, "repository_capacity": 30, "max_generations": 25}
    values.update(overrides)
    return MomdwaParams(**values)


class HalfBrokenProblem:
    """Schaffer objectives, but evaluation fails for negative x and overflows above 500"""

    n_objectives = 2
    bounds = Bounds.uniform(-1000.0, 1000.0, 1)

    def evaluate(self, position):
        x = float(position[0])
        if x < 0:
            raise EvaluationError("negative input")
        if x > 500:
            return EvaluationRecord(objectives=[np.inf, 0.0])
        return EvaluationRecord(objectives=[x ** 2, (x - 2.0) ** 2])


def test_initialize_population_degenerate_interval():
    population = initialize_population(Bounds.uniform(3.0, 3.0, 2), 2, np.random.default_rng(0))
    assert len(population) == 2
    for p in population:
        assert p.position.tolist() == [3.0, 3.0]
        assert not p.evaluated


def test_initialize_population_range_and_mean():
    population = initialize_population(Bounds.uniform(0.0, 1.0, 2), 1000, np.random.default_rng(1))
    positions = np.vstack([p.position for p in population])
    assert np.all((positions >= 0.0) & (positions <= 1.0))

    population = initialize_population(Bounds.uniform(0.0, 1.0, 1), 10_000, np.random.default_rng(2))
    mean = np.mean([p.position[0] for p in population])
    assert abs(mean - 0.5) <= 0.02


def test_initialize_population_rejects_bad_input():
    with pytest.raises(ConfigurationError):
        initialize_population(Bounds.uniform(0.0, 1.0, 2), 0, np.random.default_rng(0))
    inverted = Bounds.model_construct(lower=np.array([1.0]), upper=np.array([0.0]))
    with pytest.raises(ConfigurationError):
        initialize_population(inverted, 5, np.random.default_rng(0))


def test_damped_wave_move_examples():
    assert damped_wave_move(0.0, 2.0, 1.0, 1.0, 0.5, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert damped_wave_move(0.25, 0.0, 1.0, 1.0, 1.0, 0.0) == pytest.approx(0.8, abs=1e-12)
    assert damped_wave_move(0.7, 3.0, 0.0, 1.5, 0.3, 0.0) == 0.0


def test_guided_move_examples():
    assert guided_move(1.0, 0, 0.95, 0.5) == pytest.approx(1.5, abs=1e-12)
    assert guided_move(1.25, 10, 0.95, 0.0) == 1.25
    assert abs(guided_move(1.0, 500, 0.95, 0.999) - 1.0) < 1e-9

    steps = [guided_move(0.0, gen, 0.95, 0.7) for gen in range(100)]
    assert all(a >= b for a, b in zip(steps, steps[1:]))


def test_update_position_branch_forcing():
    leader = Particle(position=np.array([1.0, -2.0, 3.0]))
    current = Particle(position=np.array([0.3, 0.4, 0.5]))

    guided_only = MomdwaParams.model_construct(**{**MomdwaParams().model_dump(), "threshold": 0.0})
    rng = np.random.default_rng(8)
    new = update_position(current, leader, 3, guided_only, rng)
    replay = np.random.default_rng(8)
    replay.random(3)
    assert np.array_equal(new, leader.position + replay.random(3) * 0.95 ** 3)

    wave_only = MomdwaParams.model_construct(**{**MomdwaParams().model_dump(), "threshold": 1.0})
    rng = np.random.default_rng(8)
    new = update_position(current, leader, 3, wave_only, rng)
    replay = np.random.default_rng(8)
    replay.random(3)
    r = replay.random(3)
    bb = replay.uniform(-2.0, 2.0, 3)
    gg = 1.0 - replay.random(3)
    expected = damped_wave_move(current.position, leader.position, wave_only.amplitude(3), bb, gg, r)
    assert np.allclose(new, expected, rtol=0, atol=1e-12)


def test_update_position_replays_seeded_branch_pattern():
    params = small_params(threshold=0.5, max_generations=10)
    leader = Particle(position=np.array([0.5, 1.5, -0.5, 2.0]))
    current = Particle(position=np.array([0.1, 0.2, 0.3, 0.4]))

    new = update_position(current, leader, 2, params, np.random.default_rng(99))

    replay = np.random.default_rng(99)
    r_sel = replay.random(4)
    r = replay.random(4)
    wave = np.flatnonzero(r_sel < 0.5)
    expected = leader.position + r * 0.95 ** 2
    bb = replay.uniform(-2.0, 2.0, wave.size)
    gg = 1.0 - replay.random(wave.size)
    expected[wave] = damped_wave_move(
        current.position[wave], leader.position[wave], params.amplitude(2), bb, gg, r[wave]
    )
    assert np.allclose(new, expected, rtol=0, atol=1e-12)


def test_update_position_singular_denominator_keeps_guided_value():
    values = {**small_params().model_dump(), "threshold": 1.0, "bb_low": 0.0, "bb_high": 0.0}
    params = MomdwaParams.model_construct(**values)
    leader = Particle(position=np.array([1.0]))
    current = Particle(position=np.array([0.0]))
    # bb + pos is always 0, so the coordinate falls back to the guided move
    new = update_position(current, leader, 1, params, np.random.default_rng(4))
    replay = np.random.default_rng(4)
    replay.random(1)
    r = replay.random(1)
    assert new[0] == pytest.approx(1.0 + r[0] * 0.95, abs=1e-12)


def test_handle_bounds_examples():
    bounds = Bounds.uniform(0.0, 1.0, 1)
    # threshold 0 means r_b > threshold always: clamp
    assert handle_bounds(np.array([5.0]), bounds, 0.0, np.random.default_rng(0))[0] == 1.0
    assert handle_bounds(np.array([-5.0]), bounds, 0.0, np.random.default_rng(0))[0] == 0.0
    for threshold in (0.0, 0.5, 1.0):
        assert handle_bounds(np.array([0.5]), bounds, threshold, np.random.default_rng(0))[0] == 0.5

    # threshold 1 means r_b <= threshold always: resample with the next draw
    resampled = handle_bounds(np.array([-3.0]), bounds, 1.0, np.random.default_rng(6))
    replay = np.random.default_rng(6)
    replay.random(1)
    assert resampled[0] == replay.random(1)[0]


def test_handle_bounds_containment():
    rng = np.random.default_rng(12)
    lower = rng.uniform(-5, 0, 10)
    upper = lower + rng.uniform(0, 5, 10)
    bounds = Bounds(lower=lower, upper=upper)
    raw = rng.uniform(-50, 50, size=(10_000, 10))
    for row in raw:
        out = handle_bounds(row, bounds, 0.3, rng)
        assert np.all(out >= lower) and np.all(out <= upper)
        inside = (row >= lower) & (row <= upper)
        assert np.array_equal(out[inside], row[inside])


def test_optimize_zero_generations_is_initial_rank_one_set():
    params = small_params(max_generations=0, repository_capacity=100)
    problem = SchafferProblem()
    repository, history = optimize(problem, params, RandomStreams(5))

    initial = initialize_population(problem.bounds, params.population_size, RandomStreams(5).init)
    objectives = np.vstack([problem.evaluate(p.position).objectives for p in initial])
    expected = [p.position[0] for p, keep in zip(initial, non_dominated_mask(objectives)) if keep]

    assert sorted(p.position[0] for p in repository) == sorted(expected)
    assert len(history) == 1 and history[0].generation == 0


def test_optimize_invariants_every_generation():
    params = small_params()
    problem = SchafferProblem()
    optimizer = MomdwaOptimizer(problem, params, RandomStreams(9))
    repository, history = optimizer.optimize()

    assert len(history) == params.max_generations + 1
    assert [row.generation for row in history] == list(range(params.max_generations + 1))
    assert repository.is_mutually_non_dominated()
    assert len(repository) <= params.repository_capacity
    for member in repository:
        assert problem.bounds.contains(member.position)

    minima = np.array([row.objective_minima for row in history])
    assert np.all(np.diff(minima, axis=0) <= 0.0)


@pytest.mark.parametrize("name", [ProblemName.Q1, ProblemName.Q2, ProblemName.Q3])
@pytest.mark.parametrize("objectives", [2, 3])
def test_quantum_history_minima_never_increase(name, objectives):
    bundle = ProblemRegistry().build(name, objectives=objectives)
    params = small_params(population_size=12, repository_capacity=15, max_generations=8)
    repository, history = optimize(bundle, params, RandomStreams(4))

    assert repository.is_mutually_non_dominated()
    minima = np.array([row.objective_minima for row in history])
    assert minima.shape == (params.max_generations + 1, objectives)
    assert np.all(np.isfinite(minima))
    assert np.all(np.diff(minima, axis=0) <= 0.0)


def test_optimize_is_deterministic_and_worker_independent():
    problem = SchafferProblem()
    first, _ = optimize(problem, small_params(), RandomStreams(21))
    second, _ = optimize(problem, small_params(), RandomStreams(21))
    threaded, _ = optimize(problem, small_params(workers=4), RandomStreams(21))

    positions = np.vstack([p.position for p in first])
    assert np.array_equal(positions, np.vstack([p.position for p in second]))
    assert np.array_equal(positions, np.vstack([p.position for p in threaded]))


def test_failed_evaluations_are_quarantined():
    for workers in (1, 3):
        repository, history = optimize(HalfBrokenProblem(), small_params(population_size=60, workers=workers), RandomStreams(2))
        assert len(repository) >= 1
        for member in repository:
            assert 0.0 <= member.position[0] <= 500.0
            assert np.all(np.isfinite(member.objectives))
            assert not member.quarantined


def test_quarantined_particle_shape():
    optimizer = MomdwaOptimizer(HalfBrokenProblem(), small_params(), RandomStreams(0))
    particles = optimizer.evaluate_population([np.array([-1.0]), np.array([1.0])])
    assert particles[0].quarantined and np.all(np.isinf(particles[0].objectives))
    assert not particles[1].quarantined
    assert particles[1].objectives.tolist() == [1.0, 1.0]


def test_schaffer_front_accuracy():
    params = MomdwaParams(population_size=50, repository_capacity=100, max_generations=100)
    problem = SchafferProblem()
    repository, _ = optimize(problem, params, RandomStreams(1))
    objectives = repository.objectives
    assert problem.front_gap(objectives[:, 0], objectives[:, 1]).max() <= 0.05
    assert objectives[:, 0].min() <= 0.05
    assert objectives[:, 0].max() >= 3.8
