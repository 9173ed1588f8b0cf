"""
Templates assign node kinds and parameter pools to grid columns; seeding draws
kinds, parameters and connections from them.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .genotype import GRID_KINDS, Coord, Genotype, NodeGene, NodeKind, arity
from ..utils.config import config
from ..utils.errors import ConfigurationError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class ParameterPools:
    conv_filters: Tuple[int, ...] = config.CONV_FILTERS
    conv_kernels: Tuple[int, ...] = config.CONV_KERNELS
    conv_strides: Tuple[int, ...] = config.CONV_STRIDES
    fc_widths: Tuple[int, ...] = config.FC_WIDTHS
    inception_channels: Tuple[int, ...] = config.INCEPTION_CHANNELS
    residual_kernels: Tuple[int, ...] = config.RESIDUAL_KERNELS
    residual_strides: Tuple[int, ...] = config.RESIDUAL_STRIDES
    pool_sizes: Tuple[int, ...] = (config.POOL_SIZE,)


@dataclass(frozen=True)
class ColumnSpec:
    kinds: Tuple[NodeKind, ...]


@dataclass(frozen=True)
class Template:
    rows: int
    columns: int
    levels_back: int
    column_specs: Tuple[ColumnSpec, ...]
    pools: ParameterPools = field(default_factory=ParameterPools)
    num_classes: int = 10

    def validate(self) -> List[str]:
        problems = []
        if self.rows < 1 or self.columns < 1:
            problems.append(f"grid must be at least 1x1, got {self.rows}x{self.columns}")
        if self.levels_back < 1:
            problems.append(f"levels_back must be >= 1, got {self.levels_back}")
        if self.num_classes < 2:
            problems.append(f"num_classes must be >= 2, got {self.num_classes}")
        if len(self.column_specs) != self.columns:
            problems.append(f"template describes {len(self.column_specs)} columns, grid has {self.columns}")
            return problems

        for index, spec in enumerate(self.column_specs, start=1):
            if not spec.kinds:
                problems.append(f"column {index} has an empty kind pool")
            for kind in spec.kinds:
                if kind not in GRID_KINDS:
                    problems.append(f"column {index}: {kind.value} cannot be placed in the grid")

        fc_columns = [i for i, spec in enumerate(self.column_specs, start=1) if NodeKind.FC in spec.kinds]
        if not fc_columns:
            problems.append("template has no column containing FC layers")
        elif set(self.column_specs[fc_columns[-1] - 1].kinds) != {NodeKind.FC}:
            problems.append(f"last FC column {fc_columns[-1]} must contain only FC nodes")

        pools = self.pools
        for name in ("conv_filters", "conv_kernels", "conv_strides", "fc_widths",
                     "inception_channels", "residual_kernels", "residual_strides", "pool_sizes"):
            values = getattr(pools, name)
            if not values or any(int(v) < 1 for v in values):
                problems.append(f"parameter pool {name} must hold positive values")
        return problems


def default_template(rows: int = config.ROWS, columns: int = config.COLUMNS,
                     levels_back: int = config.LEVELS_BACK, num_classes: int = 10,
                     pools: Optional[ParameterPools] = None) -> Template:
    """Convolutions first, a mixed band of layers and modules, two FC columns last"""
    if columns < 3:
        raise ConfigurationError(f"default template needs at least 3 columns, got {columns}")
    conv = ColumnSpec((NodeKind.CONV,))
    middle = ColumnSpec((NodeKind.CONV, NodeKind.SUM, NodeKind.MAX, NodeKind.AVG,
                         NodeKind.RES, NodeKind.RES_B, NodeKind.INC))
    fc = ColumnSpec((NodeKind.FC,))

    head = min(2, columns - 2)
    specs = [conv] * head + [middle] * (columns - head - 2) + [fc, fc]
    return Template(rows=rows, columns=columns, levels_back=levels_back,
                    column_specs=tuple(specs), pools=pools or ParameterPools(),
                    num_classes=num_classes)


def _pick(rng: np.random.Generator, values):
    return values[int(rng.integers(len(values)))]


def draw_params(kind: NodeKind, pools: ParameterPools, rng: np.random.Generator,
                num_classes: int) -> Dict[str, int]:
    if kind is NodeKind.CONV:
        return {"filters": _pick(rng, pools.conv_filters),
                "kernel": _pick(rng, pools.conv_kernels),
                "stride": _pick(rng, pools.conv_strides)}
    if kind is NodeKind.FC:
        return {"units": _pick(rng, tuple(pools.fc_widths) + (num_classes,))}
    if kind in (NodeKind.MAX, NodeKind.AVG):
        return {"size": _pick(rng, pools.pool_sizes)}
    if kind is NodeKind.INC:
        return {name: _pick(rng, pools.inception_channels)
                for name in ("c1", "c2", "c3", "r1", "r2", "r3")}
    if kind is NodeKind.RES:
        return {"n_kernel": _pick(rng, pools.residual_kernels),
                "m_kernel": _pick(rng, pools.residual_kernels),
                "stride": _pick(rng, pools.residual_strides),
                "filters": _pick(rng, pools.conv_filters)}
    if kind is NodeKind.RES_B:
        return {"kernel": _pick(rng, pools.residual_kernels),
                "stride": _pick(rng, pools.residual_strides),
                "filters": _pick(rng, pools.conv_filters),
                "reduce": _pick(rng, pools.inception_channels)}
    return {}


def random_inputs(sources: List[Coord], count: int, rng: np.random.Generator) -> Tuple[Coord, ...]:
    return tuple(sources[int(rng.integers(len(sources)))] for _ in range(count))


def seed_from_template(template: Template, rng: np.random.Generator, library_size: int,
                       mult_index: Optional[int] = None, lineage: str = "") -> Genotype:
    """Random genotype following the template; mult_index None draws it uniformly"""
    problems = template.validate()
    if problems:
        raise ConfigurationError("invalid template: " + "; ".join(problems))
    if library_size < 1:
        raise ConfigurationError(f"library_size must be >= 1, got {library_size}")

    # A placeholder genotype answers L-back source queries while the grid is drawn
    shape_only = Genotype(rows=template.rows, columns=template.columns,
                          levels_back=template.levels_back, grid=(), output_gene=Coord(0, 0),
                          mult_index=0, library_size=library_size)
    grid = []
    for column, spec in enumerate(template.column_specs, start=1):
        sources = shape_only.source_candidates(column)
        cells = []
        for _ in range(template.rows):
            kind = _pick(rng, spec.kinds)
            params = draw_params(kind, template.pools, rng, template.num_classes)
            cells.append(NodeGene(kind, params, random_inputs(sources, arity(kind), rng)))
        grid.append(tuple(cells))

    draft = Genotype(rows=template.rows, columns=template.columns, levels_back=template.levels_back,
                     grid=tuple(grid), output_gene=Coord(0, 0), mult_index=0,
                     library_size=library_size, lineage=lineage)
    candidates = draft.output_candidates()
    output_gene = candidates[int(rng.integers(len(candidates)))]
    if mult_index is None:
        mult_index = int(rng.integers(library_size))
    elif not 0 <= mult_index < library_size:
        raise ConfigurationError(f"mult_index {mult_index} outside library of {library_size}")

    return Genotype(rows=draft.rows, columns=draft.columns, levels_back=draft.levels_back,
                    grid=draft.grid, output_gene=output_gene, mult_index=int(mult_index),
                    library_size=library_size, lineage=lineage)
