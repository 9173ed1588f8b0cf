# Multi-objective evolutionary search over genotypes and multipliers
from .individual import WORST_FITNESS, Fitness, Individual, fitness_f3
from .sorting import crowding_distance, crowding_reduce, dominates, non_dominated_sort
from .scenario import Scenario, ScenarioPolicy
from .evaluation import EvaluationTask, candidate_rng, evaluate_candidate, run_tasks
from .archive import ParetoArchive
from .evolution import Evolution, EvolutionSettings, SearchData, evolve, select_survivors

__all__ = [
    "WORST_FITNESS", "Fitness", "Individual", "fitness_f3", "crowding_distance",
    "crowding_reduce", "dominates", "non_dominated_sort", "Scenario", "ScenarioPolicy",
    "EvaluationTask", "candidate_rng", "evaluate_candidate", "run_tasks", "ParetoArchive",
    "Evolution", "EvolutionSettings", "SearchData", "evolve", "select_survivors",
]
