"""
Tests for dominance, non-dominated sorting, crowding distance and the repository
"""

import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.models import Particle
from src.services.pareto_service import (
    dominates, non_dominated_sort, crowding_distance, Repository, update_repository, select_leader,
)


def particle(*objectives, position=None, **kwargs) -> Particle:
    return Particle(
        position=np.zeros(1) if position is None else np.asarray(position, dtype=float),
        objectives=np.asarray(objectives, dtype=float),
        **kwargs,
    )


def test_dominance_examples():
    assert dominates((1, 2), (2, 3))
    assert not dominates((1, 3), (3, 1))
    assert not dominates((3, 1), (1, 3))
    assert not dominates((1, 2), (1, 2))
    assert dominates((1, 2), (1, 3))


def test_dominance_length_mismatch():
    with pytest.raises(ValueError):
        dominates((1, 2), (1, 2, 3))


def test_dominance_is_a_strict_partial_order():
    rng = np.random.default_rng(11)
    # small integer grid so ties and equal vectors actually occur
    vectors = rng.integers(0, 4, size=(3000, 3, 2))
    for a, b, c in vectors:
        assert not dominates(a, a)
        assert not (dominates(a, b) and dominates(b, a))
        if dominates(a, b) and dominates(b, c):
            assert dominates(a, c)


def test_non_dominated_sort_examples():
    assert non_dominated_sort([particle(1, 1)]).tolist() == [1]
    assert non_dominated_sort([particle(1, 2), particle(2, 1), particle(3, 3)]).tolist() == [1, 1, 2]

    layered = [particle(1, 4), particle(2, 2), particle(4, 1), particle(3, 3), particle(4, 4)]
    assert non_dominated_sort(layered).tolist() == [1, 1, 1, 2, 3]


def test_rank_one_matches_brute_force():
    rng = np.random.default_rng(5)
    for size in (1, 2, 10, 50, 200):
        objectives = rng.integers(0, 20, size=(size, 2)).astype(float)
        population = [particle(*row) for row in objectives]
        ranks = non_dominated_sort(population)

        brute = [not any(dominates(other, row) for other in objectives) for row in objectives]
        assert (ranks == 1).tolist() == brute
        # every later layer is dominated by some member of the previous layer
        for i, rank in enumerate(ranks):
            if rank > 1:
                assert any(dominates(objectives[j], objectives[i]) for j in np.flatnonzero(ranks == rank - 1))


def test_crowding_distance_single_objective():
    distances = crowding_distance([particle(0.0), particle(0.5), particle(1.0)])
    assert distances[0] == np.inf and distances[2] == np.inf
    assert distances[1] == pytest.approx(1.0, abs=1e-12)


def test_crowding_distance_small_fronts_are_infinite():
    assert np.all(np.isinf(crowding_distance([particle(1, 2)])))
    assert np.all(np.isinf(crowding_distance([particle(1, 2), particle(2, 1)])))


def test_crowding_distance_constant_objective_contributes_nothing():
    front = [particle(1, 0), particle(1, 1), particle(1, 3), particle(1, 4)]
    distances = crowding_distance(front)
    # only the second objective counts: (3 - 0)/4 and (4 - 1)/4
    assert distances[0] == np.inf and distances[3] == np.inf
    assert distances[1] == pytest.approx(0.75, abs=1e-12)
    assert distances[2] == pytest.approx(0.75, abs=1e-12)


def test_crowding_distance_constant_objective_any_order():
    front = [particle(1, 1), particle(1, 0), particle(1, 3), particle(1, 4)]
    distances = crowding_distance(front)
    assert distances[1] == np.inf and distances[3] == np.inf
    assert distances[0] == pytest.approx(0.75, abs=1e-12)
    assert distances[2] == pytest.approx(0.75, abs=1e-12)


def test_crowding_distance_constant_objective_permutation_invariant():
    rng = np.random.default_rng(19)
    for _ in range(200):
        objectives = rng.random((6, 3))
        objectives[:, rng.integers(3)] = 2.5
        distances = crowding_distance([particle(*row) for row in objectives])
        order = rng.permutation(6)
        permuted = crowding_distance([particle(*objectives[i]) for i in order])
        assert np.allclose(np.sort(distances), np.sort(permuted), atol=1e-12)
        # two varying columns give at most four boundary members
        assert np.count_nonzero(np.isinf(distances)) <= 4


def test_crowding_distance_all_constant_front_is_zero():
    distances = crowding_distance([particle(2, 2), particle(2, 2), particle(2, 2)])
    assert distances.tolist() == [0.0, 0.0, 0.0]


def test_crowding_distance_two_objectives():
    front = [particle(0, 3), particle(1, 2), particle(2, 1), particle(3, 0)]
    distances = crowding_distance(front)
    assert distances[1] == pytest.approx(4 / 3, abs=1e-12)
    assert distances[2] == pytest.approx(4 / 3, abs=1e-12)


def test_crowding_distance_permutation_invariant():
    rng = np.random.default_rng(3)
    for _ in range(200):
        objectives = rng.random((8, 3))
        distances = crowding_distance([particle(*row) for row in objectives])
        order = rng.permutation(8)
        permuted = crowding_distance([particle(*objectives[i]) for i in order])
        assert np.allclose(np.sort(distances), np.sort(permuted), atol=1e-12)
        assert np.all(distances[np.isfinite(distances)] >= 0.0)
        for j in range(3):
            assert distances[np.argmin(objectives[:, j])] == np.inf
            assert distances[np.argmax(objectives[:, j])] == np.inf


def test_update_repository_evicts_dominated_member():
    rep = update_repository(Repository(10), [particle(1, 1)])
    rep = update_repository(rep, [particle(0, 0)])
    assert [p.objectives.tolist() for p in rep] == [[0.0, 0.0]]


def test_update_repository_keeps_incomparable_members():
    rep = update_repository(Repository(10), [particle(1, 2)])
    rep = update_repository(rep, [particle(2, 1)])
    assert len(rep) == 2


def test_update_repository_truncates_one_at_a_time():
    line = [particle(0, 4), particle(1, 3), particle(2, 2), particle(3, 1), particle(4, 0)]
    rep = update_repository(Repository(3), line)
    # first pass: interior members tie at 1.0, lowest index (1, 3) goes;
    # second pass: (3, 1) has 1.0 against 1.5 for (2, 2)
    assert [p.objectives.tolist() for p in rep] == [[0.0, 4.0], [2.0, 2.0], [4.0, 0.0]]


def test_update_repository_skips_quarantined_and_non_finite():
    candidates = [
        particle(np.inf, np.inf, quarantined=True),
        particle(np.nan, 1.0),
        particle(0.5, 0.5),
    ]
    rep = update_repository(Repository(5), candidates)
    assert [p.objectives.tolist() for p in rep] == [[0.5, 0.5]]


def test_repository_invariants_under_random_updates():
    rng = np.random.default_rng(17)
    rep = Repository(15)
    for _ in range(300):
        rep = update_repository(rep, [particle(*row) for row in rng.random((10, 2))])
        assert len(rep) <= 15
        assert rep.is_mutually_non_dominated()


def test_repository_minima_never_increase():
    rng = np.random.default_rng(23)
    rep = update_repository(Repository(8), [particle(*row) for row in rng.random((10, 3))])
    minima = np.array(rep.objective_minima())
    for _ in range(200):
        rep = update_repository(rep, [particle(*row) for row in rng.random((10, 3))])
        current = np.array(rep.objective_minima())
        assert np.all(current <= minima)
        minima = current


def test_select_leader():
    single = Repository(5, [particle(1, 1)])
    assert select_leader(single, np.random.default_rng(0)) is single.members[0]

    members = [particle(i, 4 - i) for i in range(4)]
    rep = Repository(5, members)
    rng = np.random.default_rng(42)
    counts = np.zeros(4)
    for _ in range(10_000):
        leader = select_leader(rep, rng)
        counts[next(i for i, m in enumerate(members) if m is leader)] += 1
    assert np.all(np.abs(counts / 10_000 - 0.25) <= 0.02)


def test_select_leader_from_empty_repository():
    with pytest.raises(RuntimeError):
        select_leader(Repository(5), np.random.default_rng(0))
