"""
Candidate records and the fitness triple
"""
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

from ..cgpnet.genotype import Genotype
from ..qengine.weights import WeightStore
from ..utils.errors import ParameterError, StateError

OBJECTIVES = ("f1", "f2", "f3")
PJ_TO_UJ = 1e-6


class Fitness(NamedTuple):
    f1: float  # accuracy, maximized
    f2: float  # parameter count, minimized
    f3: float  # energy in uJ, minimized

    def oriented(self, objectives: Sequence[str]) -> Tuple[float, ...]:
        """Objective values with every component to be minimized"""
        return tuple(-self.f1 if name == "f1" else getattr(self, name) for name in objectives)


WORST_FITNESS = Fitness(0.0, math.inf, math.inf)


def check_objectives(objectives: Sequence[str]) -> Tuple[str, ...]:
    objectives = tuple(objectives)
    if not objectives or any(name not in OBJECTIVES for name in objectives):
        raise ParameterError(f"objectives must be a non-empty subset of {OBJECTIVES}, got {objectives}")
    return objectives


@dataclass
class Individual:
    uid: int
    genotype: Genotype
    generation: int
    parent_uid: Optional[int] = None
    fitness: Optional[Fitness] = None
    rank: Optional[int] = None
    crowding: float = 0.0
    mults: int = 0
    mult_id: str = ""
    energy_pj: float = 0.0
    final_f1: Optional[float] = None
    layer_text: str = ""
    failure: Optional[str] = None
    weights: Optional[WeightStore] = field(default=None, repr=False, compare=False)

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None

    @property
    def label(self) -> str:
        return f"c{self.uid}"

    def objective_vector(self, objectives: Sequence[str]) -> Tuple[float, ...]:
        if self.fitness is None:
            raise StateError(f"individual {self.label} has not been evaluated")
        return self.fitness.oriented(objectives)


def fitness_f3(mults: int, energy_per_op_pj: float) -> float:
    """Inference energy of the convolutional layers in uJ"""
    return mults * energy_per_op_pj * PJ_TO_UJ
