"""
Ordered multiplier library; a model's position is the genotype's multiplier index
"""
import os
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

from .lut_file import load_lut_file
from .models import (MultiplierModel, build_exact, build_product_truncated,
                     build_truncated)
from ..utils.config import config
from ..utils.errors import ConfigurationError, ParameterError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class MultiplierLibrary:
    models: Tuple[MultiplierModel, ...]

    def __post_init__(self):
        if not self.models:
            raise ConfigurationError("multiplier library is empty")
        ids = [model.id for model in self.models]
        if len(set(ids)) != len(ids):
            raise ConfigurationError(f"duplicate multiplier ids in library: {ids}")
        if not any(model.is_exact for model in self.models):
            raise ConfigurationError("multiplier library needs at least one exact model")

    def __len__(self) -> int:
        return len(self.models)

    def __iter__(self) -> Iterator[MultiplierModel]:
        return iter(self.models)

    def __getitem__(self, index: int) -> MultiplierModel:
        if not 0 <= index < len(self.models):
            raise ParameterError(f"multiplier index {index} outside library of {len(self.models)}")
        return self.models[index]

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(model.id for model in self.models)

    def index_of(self, model_id: str) -> int:
        try:
            return self.ids.index(model_id)
        except ValueError:
            raise ConfigurationError(f"unknown multiplier '{model_id}', known: {', '.join(self.ids)}")

    def exact_index(self) -> int:
        return next(i for i, model in enumerate(self.models) if model.is_exact)

    def by_id(self, model_id: str) -> MultiplierModel:
        return self.models[self.index_of(model_id)]


def _stand_in(model_id: str, energy: float, family: Tuple[str, int]) -> MultiplierModel:
    kind, level = family
    if kind == "exact":
        return build_exact(energy, model_id)
    if kind == "operand":
        return build_truncated(level, energy, model_id)
    if kind == "product":
        return build_product_truncated(level, energy, model_id)
    raise ConfigurationError(f"unknown stand-in family '{kind}' for {model_id}")


def default_library(lut_dir: Optional[str] = None,
                    catalog: Sequence = config.MULTIPLIER_CATALOG) -> MultiplierLibrary:
    """Catalog of published multipliers, preferring external tables from lut_dir"""
    lut_dir = lut_dir if lut_dir is not None else config.LUT_DIR
    models = []
    for model_id, energy, family in catalog:
        path = os.path.join(lut_dir, f"{model_id}.lut") if lut_dir else None
        if path and os.path.exists(path):
            model = load_lut_file(path)
            if model.id != model_id:
                raise ConfigurationError(f"{path} holds multiplier '{model.id}', expected '{model_id}'")
        else:
            model = _stand_in(model_id, energy, family)
        models.append(model)

    library = MultiplierLibrary(tuple(models))
    logger.info(f"Multiplier library ready with {len(library)} models: {', '.join(library.ids)}")
    return library
