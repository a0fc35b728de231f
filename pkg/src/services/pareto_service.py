import logging
from typing import List, Sequence

import numpy as np

from ..models import Particle

logger = logging.getLogger(__name__)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Pareto dominance for minimization: a is no worse everywhere and strictly better somewhere"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def _objective_matrix(particles: Sequence[Particle]) -> np.ndarray:
    if any(not p.evaluated for p in particles):
        raise ValueError("all particles must be evaluated before ranking")
    return np.vstack([p.objectives for p in particles]) if particles else np.empty((0, 0))


def dominance_matrix(objectives: np.ndarray) -> np.ndarray:
    """dom[i, j] is True when row i dominates row j"""
    le = np.all(objectives[:, None, :] <= objectives[None, :, :], axis=2)
    lt = np.any(objectives[:, None, :] < objectives[None, :, :], axis=2)
    return le & lt


def non_dominated_sort(pop: Sequence[Particle]) -> np.ndarray:
    """Rank per particle: 1 for the non-dominated layer, r+1 once ranks <= r are peeled off"""
    objectives = _objective_matrix(pop)
    n = len(pop)
    ranks = np.zeros(n, dtype=int)
    if n == 0:
        return ranks

    dom = dominance_matrix(objectives)
    dominated_by = dom.sum(axis=0)
    current = np.flatnonzero(dominated_by == 0)
    rank = 1
    while current.size:
        ranks[current] = rank
        # drop the current layer's contribution to everyone it dominates
        dominated_by = dominated_by - dom[current].sum(axis=0)
        dominated_by[ranks > 0] = -1
        current = np.flatnonzero(dominated_by == 0)
        rank += 1
    return ranks


def non_dominated_mask(objectives: np.ndarray) -> np.ndarray:
    if objectives.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return ~dominance_matrix(objectives).any(axis=0)


def crowding_distance(front: Sequence[Particle]) -> np.ndarray:
    """Crowding distance summed over objectives; extremes of every objective get +inf"""
    objectives = _objective_matrix(front)
    return crowding_distance_matrix(objectives)


def crowding_distance_matrix(objectives: np.ndarray) -> np.ndarray:
    n, k = objectives.shape
    if n == 0:
        raise ValueError("crowding distance needs a non-empty front")
    distance = np.zeros(n)
    if n <= 2:
        distance[:] = np.inf
        return distance

    for j in range(k):
        order = np.argsort(objectives[:, j], kind="stable")
        column = objectives[order, j]
        span = column[-1] - column[0]
        # a constant objective has no boundary members
        if span <= 0.0:
            continue
        distance[order[0]] = np.inf
        distance[order[-1]] = np.inf
        distance[order[1:-1]] += (column[2:] - column[:-2]) / span
    return distance


class Repository:
    """Bounded archive of mutually non-dominated particles"""

    def __init__(self, capacity: int, members: List[Particle] = None):
        if capacity < 1:
            raise ValueError("repository capacity must be positive")
        self.capacity = capacity
        self.members: List[Particle] = list(members or [])

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def objectives(self) -> np.ndarray:
        return _objective_matrix(self.members)

    def objective_minima(self) -> List[float]:
        return self.objectives.min(axis=0).tolist()

    def best_fidelity(self):
        values = [p.fidelity for p in self.members if p.fidelity is not None]
        return max(values) if values else None

    def is_mutually_non_dominated(self) -> bool:
        if not self.members:
            return True
        return not dominance_matrix(self.objectives).any()


def update_repository(rep: Repository, candidates: Sequence[Particle]) -> Repository:
    """Merge candidates, keep the non-dominated subset, then truncate one particle at a time"""
    admitted = [p for p in candidates if p.evaluated and not p.quarantined and np.all(np.isfinite(p.objectives))]
    pool = rep.members + admitted
    if not pool:
        return Repository(rep.capacity)

    keep = non_dominated_mask(_objective_matrix(pool))
    members = [p for p, k in zip(pool, keep) if k]

    while len(members) > rep.capacity:
        distance = crowding_distance_matrix(_objective_matrix(members))
        # argmin returns the lowest index among ties
        members.pop(int(np.argmin(distance)))

    return Repository(rep.capacity, members)


def select_leader(rep: Repository, rng: np.random.Generator) -> Particle:
    if not rep.members:
        raise RuntimeError("cannot select a leader from an empty repository")
    return rep.members[int(rng.integers(len(rep.members)))]
