"""
Run archive: every evaluated candidate, per-generation fronts and the final set
"""
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .individual import Individual, check_objectives
from .sorting import dominates
from ..utils.errors import IntegrityError


@dataclass
class ParetoArchive:
    objectives: Tuple[str, ...]
    evaluated: List[Individual] = field(default_factory=list)
    snapshots: Dict[int, List[int]] = field(default_factory=dict)
    final: List[Individual] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        self.objectives = check_objectives(self.objectives)

    def add(self, individual: Individual) -> None:
        with self._lock:
            self.evaluated.append(individual)

    def snapshot(self, generation: int, front: List[Individual]) -> None:
        """Remember which candidates formed the first front after a generation"""
        with self._lock:
            self.snapshots[generation] = [member.uid for member in front]

    def finalize(self, front: List[Individual]) -> None:
        for a in front:
            for b in front:
                if a is not b and dominates(a, b, self.objectives):
                    raise IntegrityError(f"final set holds {a.label} dominating {b.label}")
        self.final = list(front)

    def get(self, uid: int) -> Optional[Individual]:
        return next((member for member in self.evaluated if member.uid == uid), None)

    def __len__(self) -> int:
        return len(self.evaluated)

    @property
    def generations(self) -> int:
        return max(self.snapshots) if self.snapshots else 0
