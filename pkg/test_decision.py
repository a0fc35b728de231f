"""
Tests for fidelity screening and TOPSIS selection
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.models import Particle, TopsisWeights
from src.services.decision_service import screen_by_fidelity, positivize, topsis_scores, select_best
from src.services.pareto_service import Repository
from src.utils.errors import DecisionError


def member(objectives, fidelity=None) -> Particle:
    return Particle(position=np.zeros(2), objectives=np.asarray(objectives, dtype=float), fidelity=fidelity)


def test_screen_by_fidelity_threshold():
    good, poor = member((0.1, 1.0), 0.999), member((0.2, 0.5), 0.990)
    assert screen_by_fidelity([good, poor], 0.995) == [good]
    assert screen_by_fidelity([good, poor], 0.0) == [good, poor]


def test_screen_by_fidelity_fallback_to_best():
    a, b = member((0.1, 1.0), 0.80), member((0.2, 0.5), 0.90)
    screened = screen_by_fidelity(Repository(5, [a, b]), 0.995)
    assert len(screened) == 1 and screened[0] is b


def test_screen_by_fidelity_skips_members_without_fidelity():
    a, b = member((1.0, 0.0)), member((0.0, 1.0))
    assert screen_by_fidelity([a, b], 0.995) == [a, b]
    assert screen_by_fidelity([a, b], None) == [a, b]


def test_screen_by_fidelity_empty_repository():
    with pytest.raises(DecisionError):
        screen_by_fidelity(Repository(5), 0.995)


def test_positivize():
    assert positivize(np.array([[1.0], [3.0], [2.0]]))[:, 0].tolist() == [2.0, 0.0, 1.0]
    assert positivize(np.full((4, 2), 7.0)).tolist() == [[0.0, 0.0]] * 4

    rng = np.random.default_rng(1)
    matrix = rng.random((6, 3))
    result = positivize(matrix)
    assert np.allclose(result.min(axis=0), 0.0)
    assert np.allclose(result.max(axis=0), np.ptp(matrix, axis=0))


def test_topsis_two_row_example():
    scores = topsis_scores(np.array([[1.0, 0.0], [0.0, 1.0]]), TopsisWeights(weights=[0.7, 0.3]))
    expected = np.sqrt(0.7) / (np.sqrt(0.7) + np.sqrt(0.3))
    assert scores[0] == pytest.approx(expected, abs=1e-12)
    assert scores[1] == pytest.approx(1.0 - expected, abs=1e-12)
    assert scores[0] == pytest.approx(0.604, abs=1e-3)


def test_topsis_symmetric_cases():
    identical = topsis_scores(np.ones((3, 2)), TopsisWeights(weights=[0.7, 0.3]))
    assert np.allclose(identical, 1.0 / 3.0)

    even = topsis_scores(np.array([[1.0, 0.0], [0.0, 1.0]]), TopsisWeights(weights=[0.5, 0.5]))
    assert even[0] == pytest.approx(even[1], abs=1e-12)

    single = topsis_scores(np.array([[0.3, 0.2, 0.1]]), TopsisWeights(weights=[0.6, 0.2, 0.2]))
    assert single.tolist() == [1.0]


def test_topsis_column_mismatch():
    with pytest.raises(ValueError):
        topsis_scores(np.ones((2, 3)), TopsisWeights(weights=[0.5, 0.5]))


def test_topsis_weights_must_be_positive():
    with pytest.raises(ValidationError):
        TopsisWeights(weights=[0.5, 0.0])


def test_select_best_two_members():
    left, right = member((0.0, 1.0), 0.999), member((1.0, 0.0), 0.999)
    selected, report = select_best(Repository(5, [left, right]), TopsisWeights(weights=[0.7, 0.3]), 0.995)
    # positivized rows are (1, 0) for left and (0, 1) for right
    assert selected is left
    assert report.selected_index == 0
    assert report.screened_count == 2
    assert sum(report.scores) == pytest.approx(1.0, abs=1e-12)


def test_select_best_singleton():
    only = member((0.3, 0.4), 0.5)
    selected, report = select_best([only], TopsisWeights(weights=[0.7, 0.3]), 0.995)
    assert selected is only
    assert report.selected_score == pytest.approx(1.0, abs=1e-12)


def test_topsis_invariants_on_random_matrices():
    rng = np.random.default_rng(7)
    for _ in range(500):
        matrix = rng.random((5, 3))
        weights = TopsisWeights(weights=list(rng.uniform(0.1, 1.0, 3)))
        scores = topsis_scores(positivize(matrix), weights)
        assert np.all(scores >= 0.0)
        assert scores.sum() == pytest.approx(1.0, abs=1e-12)

        scaled = TopsisWeights(weights=[w * 3.7 for w in weights.weights])
        assert np.argmax(topsis_scores(positivize(matrix), scaled)) == np.argmax(scores)

        chosen = int(np.argmax(scores))
        other = (chosen + 1) % 5
        duplicated = np.vstack([matrix, matrix[other]])
        again = int(np.argmax(topsis_scores(positivize(duplicated), weights)))
        assert np.array_equal(duplicated[again], matrix[chosen])
