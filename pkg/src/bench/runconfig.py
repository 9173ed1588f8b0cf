"""
Run configuration: defaults from Config, overridden by a TOML file, then by CLI flags
"""
import tomllib
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from ..moea.scenario import Scenario
from ..utils.config import config
from ..utils.errors import ConfigurationError


@dataclass(frozen=True)
class RunConfig:
    rows: int = config.ROWS
    columns: int = config.COLUMNS
    levels_back: int = config.LEVELS_BACK
    pop_size: int = config.POP_SIZE
    generations: int = config.GENERATIONS
    train_size: Optional[int] = config.TRAIN_SIZE
    retrain_size: Optional[int] = config.RETRAIN_SIZE
    test_size: Optional[int] = config.TEST_SIZE
    epochs_train: int = config.EPOCHS_TRAIN
    epochs_retrain: int = config.EPOCHS_RETRAIN
    batch_size: int = config.BATCH_SIZE
    learning_rate: float = config.LEARNING_RATE
    l2_coefficient: float = config.L2_COEFFICIENT
    augment: bool = config.AUGMENT
    p_arch: float = config.P_ARCH
    p_mult: float = config.P_MULT
    scenario: str = config.SCENARIO
    fixed_multiplier: str = config.FIXED_MULTIPLIER
    dataset: str = config.DATASET
    lut_dir: Optional[str] = config.LUT_DIR
    seed: int = config.SEED
    workers: int = config.WORKERS
    train_subset: Optional[int] = None
    retrain_top_k: Optional[int] = config.RETRAIN_TOP_K
    output_dir: Optional[str] = None

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(mapping) - set(known))
        if unknown:
            raise ConfigurationError(f"unknown run configuration keys: {', '.join(unknown)}")
        return cls(**dict(mapping))

    def override(self, **values) -> "RunConfig":
        """New config with every non-None value applied"""
        return replace(self, **{key: value for key, value in values.items() if value is not None})

    def validate(self) -> List[str]:
        problems = []
        for name in ("rows", "columns", "levels_back", "pop_size", "epochs_train", "batch_size", "workers"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                problems.append(f"{name} must be a positive integer, got {value!r}")
        for name in ("generations", "epochs_retrain"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                problems.append(f"{name} must be a non-negative integer, got {value!r}")
        for name in ("train_size", "retrain_size", "test_size", "train_subset", "retrain_top_k"):
            value = getattr(self, name)
            if value is not None and (not isinstance(value, int) or value < 1):
                problems.append(f"{name} must be a positive integer when set, got {value!r}")
        for name in ("p_arch", "p_mult"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
                problems.append(f"{name} must lie in [0, 1], got {value!r}")
        if not isinstance(self.learning_rate, (int, float)) or not self.learning_rate > 0:
            problems.append(f"learning_rate must be > 0, got {self.learning_rate!r}")
        if not isinstance(self.l2_coefficient, (int, float)) or self.l2_coefficient < 0:
            problems.append(f"l2_coefficient must be >= 0, got {self.l2_coefficient!r}")
        if str(self.scenario).lower() not in {s.value for s in Scenario}:
            problems.append(f"scenario must be one of {[s.value for s in Scenario]}, got {self.scenario!r}")
        if isinstance(self.columns, int) and 1 <= self.columns < 3:
            problems.append(f"columns must be >= 3 for the default template, got {self.columns}")
        return problems

    def to_manifest(self) -> Dict[str, Any]:
        return asdict(self)

    def default_output_dir(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(config.OUTPUT_ROOT) / f"{str(self.scenario).lower()}_seed{self.seed}"


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"{path}: {e}") from e
    # A [run] table is accepted as well as top-level keys
    if set(data) == {"run"} and isinstance(data["run"], dict):
        data = data["run"]
    return RunConfig.from_mapping(data)
