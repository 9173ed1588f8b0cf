"""
Search scenarios: which objectives count and whether the multiplier gene may move
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from .individual import check_objectives
from ..multsim.library import MultiplierLibrary
from ..utils.config import config
from ..utils.errors import ConfigurationError


class Scenario(Enum):
    S1 = "s1"  # accuracy and energy, multiplier co-optimized
    S2 = "s2"  # accuracy, parameters and energy, multiplier co-optimized
    S3 = "s3"  # accuracy and energy, one configured approximate multiplier
    S4 = "s4"  # accuracy and energy, exact multiplier


@dataclass(frozen=True)
class ScenarioPolicy:
    scenario: Scenario
    objectives: Tuple[str, ...]
    fixed_index: Optional[int] = None

    def __post_init__(self):
        check_objectives(self.objectives)

    @property
    def multiplier_fixed(self) -> bool:
        return self.fixed_index is not None

    def effective_p_mult(self, p_mult: float) -> float:
        return 0.0 if self.multiplier_fixed else p_mult

    @classmethod
    def for_scenario(cls, name, library: MultiplierLibrary,
                     fixed_multiplier: str = config.FIXED_MULTIPLIER) -> "ScenarioPolicy":
        try:
            scenario = name if isinstance(name, Scenario) else Scenario(str(name).lower())
        except ValueError:
            raise ConfigurationError(f"unknown scenario {name!r}; expected one of "
                                     f"{[s.value for s in Scenario]}")
        if scenario is Scenario.S1:
            return cls(scenario, ("f1", "f3"))
        if scenario is Scenario.S2:
            return cls(scenario, ("f1", "f2", "f3"))
        if scenario is Scenario.S3:
            return cls(scenario, ("f1", "f3"), library.index_of(fixed_multiplier))
        return cls(scenario, ("f1", "f3"), library.exact_index())
