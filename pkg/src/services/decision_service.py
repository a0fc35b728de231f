import logging
from typing import List, Optional, Tuple, Iterable

import numpy as np

from ..models import Particle, TopsisWeights, DecisionReport
from ..utils.errors import DecisionError

logger = logging.getLogger(__name__)


def screen_by_fidelity(rep: Iterable[Particle], epsilon: Optional[float]) -> List[Particle]:
    """
    Keep members with fidelity >= epsilon.

    Falls back to the single highest-fidelity member when nobody qualifies.
    Members without a fidelity (benchmark problems) are never screened out,
    and epsilon=None disables screening.
    """
    members = list(rep)
    if not members:
        raise DecisionError("cannot select a solution from an empty repository")
    if epsilon is None or all(p.fidelity is None for p in members):
        return members

    passed = [p for p in members if p.fidelity is None or p.fidelity >= epsilon]
    if passed:
        return passed

    best = max((p for p in members if p.fidelity is not None), key=lambda p: p.fidelity)
    logger.warning(
        f"No repository member reaches fidelity {epsilon}; keeping the best at {best.fidelity:.6f}"
    )
    return [best]


def positivize(matrix: np.ndarray) -> np.ndarray:
    """Turn minimized columns into larger-is-better ones: column max minus value"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise ValueError("positivize expects a non-empty Size x K matrix")
    return matrix.max(axis=0) - matrix


def topsis_scores(matrix: np.ndarray, w: TopsisWeights) -> np.ndarray:
    """Relative closeness to the ideal row, normalized to sum to one"""
    matrix = np.asarray(matrix, dtype=float)
    weights = np.asarray(w.weights, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise DecisionError("TOPSIS needs at least one candidate row")
    if matrix.shape[1] != weights.size:
        raise ValueError(f"{weights.size} weights for {matrix.shape[1]} objective columns")

    ideal = matrix.max(axis=0)
    anti_ideal = matrix.min(axis=0)
    d_plus = np.sqrt(np.sum(weights * (matrix - ideal) ** 2, axis=1))
    d_minus = np.sqrt(np.sum(weights * (matrix - anti_ideal) ** 2, axis=1))

    total = d_plus + d_minus
    # a row sitting on both ideal and anti-ideal (all rows identical) scores 0.5
    scores = np.divide(d_minus, total, out=np.full_like(total, 0.5), where=total > 0)
    return scores / scores.sum()


def select_best(rep: Iterable[Particle], w: TopsisWeights,
                epsilon: Optional[float]) -> Tuple[Particle, DecisionReport]:
    screened = screen_by_fidelity(rep, epsilon)
    matrix = np.vstack([p.objectives for p in screened])
    scores = topsis_scores(positivize(matrix), w)

    # argmax keeps the lowest index on ties
    selected = int(np.argmax(scores))
    report = DecisionReport(
        screened_count=len(screened),
        scores=scores.tolist(),
        selected_index=selected,
        selected_score=float(scores[selected]),
    )
    logger.info(
        f"TOPSIS selected candidate {selected} of {len(screened)} screened (score {scores[selected]:.6f})"
    )
    return screened[selected], report
