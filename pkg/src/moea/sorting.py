"""
Pareto dominance, non-dominated sorting and crowding-distance reduction
"""
import math
from typing import List, Sequence

from .individual import Individual, check_objectives
from ..utils.errors import ParameterError


def dominates(a: Individual, b: Individual, objectives: Sequence[str]) -> bool:
    """f1 maximized, f2 and f3 minimized"""
    va, vb = a.objective_vector(objectives), b.objective_vector(objectives)
    return all(x <= y for x, y in zip(va, vb)) and any(x < y for x, y in zip(va, vb))


def non_dominated_sort(population: Sequence[Individual], objectives: Sequence[str]) -> List[List[Individual]]:
    """Fronts F0, F1, ...; members keep their population order inside a front"""
    objectives = check_objectives(objectives)
    size = len(population)
    dominated_by_me: List[List[int]] = [[] for _ in range(size)]
    domination_count = [0] * size
    for p in range(size):
        for q in range(size):
            if p == q:
                continue
            if dominates(population[p], population[q], objectives):
                dominated_by_me[p].append(q)
            elif dominates(population[q], population[p], objectives):
                domination_count[p] += 1

    fronts: List[List[int]] = []
    current = [p for p in range(size) if domination_count[p] == 0]
    while current:
        fronts.append(sorted(current))
        following = []
        for p in current:
            for q in dominated_by_me[p]:
                domination_count[q] -= 1
                if domination_count[q] == 0:
                    following.append(q)
        current = following
    return [[population[i] for i in front] for front in fronts]


def crowding_distance(front: Sequence[Individual], objectives: Sequence[str]) -> List[float]:
    """Per-member distance; boundaries are infinite unless an objective has zero range"""
    objectives = check_objectives(objectives)
    size = len(front)
    distances = [0.0] * size
    if size == 0:
        return distances
    vectors = [member.objective_vector(objectives) for member in front]
    for m in range(len(objectives)):
        order = sorted(range(size), key=lambda i: vectors[i][m])
        low, high = vectors[order[0]][m], vectors[order[-1]][m]
        span = high - low
        if not span > 0 or math.isinf(span):
            continue
        distances[order[0]] = math.inf
        distances[order[-1]] = math.inf
        for k in range(1, size - 1):
            distances[order[k]] += (vectors[order[k + 1]][m] - vectors[order[k - 1]][m]) / span
    return distances


def crowding_reduce(front: Sequence[Individual], n_remove: int,
                    objectives: Sequence[str]) -> List[Individual]:
    """Drop the n_remove most crowded members; on equal distance the later member goes first"""
    if n_remove < 0 or n_remove >= len(front):
        raise ParameterError(f"cannot remove {n_remove} of {len(front)} front members")
    distances = crowding_distance(front, objectives)
    for member, distance in zip(front, distances):
        member.crowding = distance
    victims = set(sorted(range(len(front)), key=lambda i: (distances[i], -i))[:n_remove])
    return [member for i, member in enumerate(front) if i not in victims]
